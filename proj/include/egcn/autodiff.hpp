#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "egcn/tensor.hpp"

namespace egcn {

/// A named trainable tensor. Lives outside any tape; tapes reference it read-only.
class Parameter {
 public:
  Parameter() = default;
  Parameter(std::string name, Tensor value) : name_(std::move(name)), value_(std::move(value)) {}

  const std::string& name() const noexcept { return name_; }
  Tensor& value() noexcept { return value_; }
  const Tensor& value() const noexcept { return value_; }

 private:
  std::string name_;
  Tensor value_;
};

/// Ordered, non-owning list of parameters. Order is the declaration order of the owner.
class ParameterList {
 public:
  void add(Parameter& p) { params_.push_back(&p); }
  std::size_t size() const noexcept { return params_.size(); }
  Parameter& operator[](std::size_t i) const { return *params_[i]; }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  std::size_t scalar_count() const;

 private:
  std::vector<Parameter*> params_;
};

/// Gradient buffers aligned with a ParameterList.
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(const ParameterList& params);

  std::size_t size() const noexcept { return grads_.size(); }
  Tensor& operator[](std::size_t i) { return grads_[i]; }
  const Tensor& operator[](std::size_t i) const { return grads_[i]; }

  void zero();
  void scale(double s);
  Gradients& operator+=(const Gradients& other);

 private:
  std::vector<Tensor> grads_;
};

/// Compressed sparse rows, used for neighbourhood aggregation.
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr;  // rows + 1 entries
  std::vector<std::size_t> col;
  std::vector<double> val;

  struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
  };
  /// Duplicate (row, col) entries are summed.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries);
  std::size_t nnz() const noexcept { return col.size(); }
};

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Tensor& grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so reverse index
/// order is a valid reverse topological order. One tape per sample.
class Tape {
 public:
  /// Receives the gradient flowing into the node being differentiated.
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// A leaf that receives a gradient (used for inputs in tests and checks).
  Var variable(Tensor value);
  /// A leaf bound to a parameter's storage; repeated calls return the same node.
  Var param(const Parameter& p);

  /// Records an op result. Throws NumericalError when the value is not finite.
  Var record(std::string_view op, Tensor value, const std::vector<Var>& parents, BackwardFn backward);

  void backward(Var loss);

  const Tensor& value(std::size_t id) const;
  const Tensor& grad(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Gradient buffer of a parent, or nullptr when it does not take gradients.
  Tensor* grad_target(std::size_t id);

  /// Gradient accumulated for a parameter by the last backward, or nullptr.
  const Tensor* gradient(const Parameter& p) const;
  /// Adds this tape's parameter gradients into `out` (aligned with `params`).
  void accumulate(const ParameterList& params, Gradients& out) const;

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    std::string op;
    Tensor own;
    const Tensor* external = nullptr;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };

  std::deque<Node> nodes_;  // stable addresses: values are handed out by reference
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
};

// ---- differentiable ops -------------------------------------------------

/// y = x·Wᵀ + b, with x n×in, W out×in, b 1×out. `b` may be an invalid Var.
Var affine(Var x, Var weight, Var bias);
/// a·bᵀ
Var matmul_nt(Var a, Var b);
Var matmul(Var a, Var b);
Var transpose(Var a);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
/// 1 − a
Var one_minus(Var a);
Var sigmoid(Var a);
Var tanh(Var a);

Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var slice_rows(Var a, std::size_t begin, std::size_t end);
Var gather_rows(Var a, const std::vector<std::size_t>& rows);
/// 1×c row mean over all rows.
Var mean_rows(Var a);
/// Repeats a 1×c row n times.
Var broadcast_rows(Var a, std::size_t n);
/// Every row of the result is the column sum of `a`.
Var colsum_broadcast(Var a);
Var row_scale(Var a, const std::vector<double>& scales);
Var sum(Var a);
/// Zeroes the diagonal of a square matrix.
Var mask_diagonal(Var a);
/// S·a for a constant sparse S.
Var spmm(const SparseMatrix& s, Var a);

/// Max over each group of rows of an n×1 column; returns k×1. `argmax` receives
/// the winning row per group (first index on ties). Groups must be non-empty.
Var segment_max(Var scores, const std::vector<std::vector<std::size_t>>& groups,
                std::vector<std::size_t>* argmax = nullptr);
/// −log softmax(logits)[target] for a k×1 column. Returns 1×1.
Var cross_entropy(Var logits, std::size_t target);

/// Inverted dropout: identity when !training or rate == 0; otherwise kept
/// units are scaled by 1/(1−rate). The mask is a pure function of `seed`.
Var dropout(Var a, double rate, std::uint64_t seed, bool training);

}  // namespace egcn
