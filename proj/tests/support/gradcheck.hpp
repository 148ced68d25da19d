#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "egcn/autodiff.hpp"

namespace egcn::testing {

struct BlockError {
  std::string name;
  double relative = 0;
  double analytic_norm = 0;
  double absolute = 0;  // ‖analytic − numeric‖
};

/// ‖a − n‖ / max(‖a‖ + ‖n‖, 1e-12)
inline double relative_error(const std::vector<double>& a, const std::vector<double>& n) {
  double diff = 0, na = 0, nn = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - n[i]) * (a[i] - n[i]);
    na += a[i] * a[i];
    nn += n[i] * n[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(na) + std::sqrt(nn), 1e-12);
}

/// Compares tape gradients with central differences (step h) for every parameter block.
/// `loss` records a scalar on the given tape using the current parameter values.
inline std::vector<BlockError> check_parameter_gradients(const ParameterList& params,
                                                         const std::function<Var(Tape&)>& loss, double h = 1e-5) {
  Tape tape;
  const Var l = loss(tape);
  tape.backward(l);
  std::vector<BlockError> out;
  for (Parameter* p : params) {
    const Tensor* g = tape.gradient(*p);
    Tensor& value = p->value();
    std::vector<double> analytic(value.size(), 0.0);
    if (g) analytic.assign(g->values().begin(), g->values().end());
    std::vector<double> numeric(value.size());
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      value[i] = saved + h;
      Tape up;
      const double lp = loss(up).value()[0];
      value[i] = saved - h;
      Tape down;
      const double lm = loss(down).value()[0];
      value[i] = saved;
      numeric[i] = (lp - lm) / (2 * h);
    }
    double norm = 0, diff = 0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      norm += analytic[i] * analytic[i];
      diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    }
    out.push_back({p->name(), relative_error(analytic, numeric), std::sqrt(norm), std::sqrt(diff)});
  }
  return out;
}

/// Gradient check of f with respect to its input, through a random linear read-out.
inline double check_input_gradient(const Tensor& x, const std::function<Var(Var)>& f, std::uint64_t seed = 7,
                                   double h = 1e-5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Tensor readout;
  auto scalar = [&](Tape& t, const Tensor& input, Var* leaf) {
    Var v = t.variable(input);
    if (leaf) *leaf = v;
    Var y = f(v);
    if (readout.empty()) {
      readout = Tensor(y.rows(), y.cols());
      for (double& r : readout.values()) r = normal(rng);
    }
    return sum(mul(y, t.constant(readout)));
  };
  Tape tape;
  Var leaf;
  const Var l = scalar(tape, x, &leaf);
  tape.backward(l);
  const Tensor analytic_t = leaf.grad();
  std::vector<double> analytic(analytic_t.values().begin(), analytic_t.values().end());
  std::vector<double> numeric(x.size());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    Tape up;
    const double lp = scalar(up, probe, nullptr).value()[0];
    probe[i] = x[i] - h;
    Tape down;
    const double lm = scalar(down, probe, nullptr).value()[0];
    probe[i] = x[i];
    numeric[i] = (lp - lm) / (2 * h);
  }
  return relative_error(analytic, numeric);
}

inline Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Tensor t(rows, cols);
  for (double& v : t.values()) v = normal(rng);
  return t;
}

inline void randomize(const ParameterList& params, std::mt19937_64& rng, double scale = 0.5) {
  std::normal_distribution<double> normal(0.0, scale);
  for (Parameter* p : params) {
    for (double& v : p->value().values()) v = normal(rng);
  }
}

}  // namespace egcn::testing
