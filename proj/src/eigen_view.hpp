#pragma once

#include <Eigen/Dense>

#include "egcn/tensor.hpp"

namespace egcn::detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<RowMatrix>;
using ConstMatrixView = Eigen::Map<const RowMatrix>;

inline MatrixView view(Tensor& t) {
  return MatrixView(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

inline ConstMatrixView view(const Tensor& t) {
  return ConstMatrixView(t.data(), static_cast<Eigen::Index>(t.rows()),
                         static_cast<Eigen::Index>(t.cols()));
}

}  // namespace egcn::detail
