#include "egcn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "eigen_view.hpp"

namespace egcn {

using detail::view;

std::size_t ParameterList::scalar_count() const {
  std::size_t n = 0;
  for (const Parameter* p : params_) n += p->value().size();
  return n;
}

Gradients::Gradients(const ParameterList& params) {
  grads_.reserve(params.size());
  for (const Parameter* p : params) grads_.push_back(Tensor::zeros_like(p->value()));
}

void Gradients::zero() {
  for (Tensor& g : grads_) g.fill(0.0);
}

void Gradients::scale(double s) {
  for (Tensor& g : grads_) g *= s;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (other.grads_.size() != grads_.size()) throw ShapeError("gradients: parameter count mismatch");
  for (std::size_t i = 0; i < grads_.size(); ++i) grads_[i] += other.grads_[i];
  return *this;
}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries) {
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseMatrix s;
  s.rows = rows;
  s.cols = cols;
  s.row_ptr.assign(rows + 1, 0);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const Triplet& e = entries[k];
    if (e.row >= rows || e.col >= cols) throw ShapeError("sparse matrix: triplet out of range");
    if (!s.col.empty() && k > 0 && entries[k - 1].row == e.row && entries[k - 1].col == e.col) {
      s.val.back() += e.value;
      continue;
    }
    s.col.push_back(e.col);
    s.val.push_back(e.value);
    ++s.row_ptr[e.row + 1];
  }
  for (std::size_t r = 0; r < rows; ++r) s.row_ptr[r + 1] += s.row_ptr[r];
  return s;
}

// ---- Var / Tape -------------------------------------------------------------

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericalError("constant: non-finite value");
  Node n;
  n.op = "constant";
  n.own = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
  if (!value.all_finite()) throw NumericalError("variable: non-finite value");
  Node n;
  n.op = "variable";
  n.own = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(const Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
  if (!p.value().all_finite()) throw NumericalError("parameter '" + p.name() + "' holds non-finite values");
  Node n;
  n.op = "param:" + p.name();
  n.external = &p.value();
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(std::string_view op, Tensor value, const std::vector<Var>& parents, BackwardFn backward) {
  if (!value.all_finite()) {
    throw NumericalError("non-finite value produced by '" + std::string(op) + "' " + shape_string(value));
  }
  Node n;
  n.op = std::string(op);
  n.own = std::move(value);
  for (const Var& p : parents) {
    if (p.valid() && nodes_[p.id()].requires_grad) n.requires_grad = true;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.external ? *n.external : n.own;
}

const Tensor& Tape::grad(std::size_t id) const {
  static const Tensor empty;
  const Node& n = nodes_.at(id);
  return n.has_grad ? n.grad : empty;
}

Tensor* Tape::grad_target(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return nullptr;
  if (!n.has_grad) {
    n.grad = Tensor::zeros_like(value(id));
    n.has_grad = true;
  }
  return &n.grad;
}

void Tape::backward(Var loss) {
  if (nodes_.empty()) throw std::logic_error("backward: empty tape");
  if (&loss.tape() != this) throw std::logic_error("backward: loss belongs to another tape");
  const Tensor& lv = value(loss.id());
  if (lv.size() != 1) throw ShapeError("backward: loss must be scalar, got " + shape_string(lv));
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
  Tensor* seed = grad_target(loss.id());
  if (seed == nullptr) return;
  (*seed)[0] = 1.0;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.has_grad) continue;
    if (!n.grad.all_finite()) {
      throw NumericalError("non-finite gradient reaching '" + n.op + "'");
    }
    if (n.backward) n.backward(*this, n.grad);
  }
}

const Tensor* Tape::gradient(const Parameter& p) const {
  auto it = param_nodes_.find(&p);
  if (it == param_nodes_.end()) return nullptr;
  const Node& n = nodes_[it->second];
  return n.has_grad ? &n.grad : nullptr;
}

void Tape::accumulate(const ParameterList& params, Gradients& out) const {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (const Tensor* g = gradient(params[i])) out[i] += *g;
  }
}

// ---- ops --------------------------------------------------------------------

namespace {

void require_same(const Var& a, const Var& b, std::string_view op) {
  if (!a.value().same_shape(b.value())) {
    throw ShapeError(std::string(op) + ": shape " + shape_string(a.value()) + " vs " +
                     shape_string(b.value()));
  }
}

template <typename F, typename D>
Var unary(std::string_view op, Var a, F f, D dfdx) {
  const Tensor& x = a.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const std::size_t ia = a.id();
  return a.tape().record(op, std::move(y), {a}, [ia, dfdx](Tape& t, const Tensor& g) {
    Tensor* ga = t.grad_target(ia);
    if (!ga) return;
    const Tensor& x = t.value(ia);
    for (std::size_t i = 0; i < x.size(); ++i) (*ga)[i] += g[i] * dfdx(x[i]);
  });
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var affine(Var x, Var weight, Var bias) {
  const Tensor& X = x.value();
  const Tensor& W = weight.value();
  if (X.cols() != W.cols()) {
    throw ShapeError("affine: input " + shape_string(X) + " does not match weight " + shape_string(W));
  }
  if (bias.valid() && (bias.value().rows() != 1 || bias.value().cols() != W.rows())) {
    throw ShapeError("affine: bias " + shape_string(bias.value()) + " for weight " + shape_string(W));
  }
  Tensor y(X.rows(), W.rows());
  view(y).noalias() = view(X) * view(W).transpose();
  if (bias.valid()) view(y).rowwise() += view(bias.value()).row(0);
  const std::size_t ix = x.id(), iw = weight.id();
  const bool has_bias = bias.valid();
  const std::size_t ib = has_bias ? bias.id() : 0;
  std::vector<Var> parents{x, weight};
  if (has_bias) parents.push_back(bias);
  return x.tape().record("affine", std::move(y), parents, [=](Tape& t, const Tensor& g) {
    if (Tensor* gx = t.grad_target(ix)) view(*gx).noalias() += view(g) * view(t.value(iw));
    if (Tensor* gw = t.grad_target(iw)) view(*gw).noalias() += view(g).transpose() * view(t.value(ix));
    if (has_bias) {
      if (Tensor* gb = t.grad_target(ib)) view(*gb).row(0) += view(g).colwise().sum();
    }
  });
}

Var matmul_nt(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.cols() != B.cols()) throw ShapeError("matmul_nt: " + shape_string(A) + " vs " + shape_string(B));
  Tensor y(A.rows(), B.rows());
  view(y).noalias() = view(A) * view(B).transpose();
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("matmul_nt", std::move(y), {a, b}, [=](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_target(ia)) view(*ga).noalias() += view(g) * view(t.value(ib));
    if (Tensor* gb = t.grad_target(ib)) view(*gb).noalias() += view(g).transpose() * view(t.value(ia));
  });
}

Var matmul(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.cols() != B.rows()) throw ShapeError("matmul: " + shape_string(A) + " vs " + shape_string(B));
  Tensor y(A.rows(), B.cols());
  view(y).noalias() = view(A) * view(B);
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("matmul", std::move(y), {a, b}, [=](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_target(ia)) view(*ga).noalias() += view(g) * view(t.value(ib)).transpose();
    if (Tensor* gb = t.grad_target(ib)) view(*gb).noalias() += view(t.value(ia)).transpose() * view(g);
  });
}

Var transpose(Var a) {
  const Tensor& A = a.value();
  Tensor y(A.cols(), A.rows());
  view(y) = view(A).transpose();
  const std::size_t ia = a.id();
  return a.tape().record("transpose", std::move(y), {a}, [=](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_target(ia)) view(*ga) += view(g).transpose();
  });
}

Var add(Var a, Var b) {
  require_same(a, b, "add");
  Tensor y = a.value();
  y += b.value();
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("add", std::move(y), {a, b}, [=](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_target(ia)) *ga += g;
    if (Tensor* gb = t.grad_target(ib)) *gb += g;
  });
}

Var sub(Var a, Var b) {
  require_same(a, b, "sub");
  Tensor y = a.value();
  view(y) -= view(b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("sub", std::move(y), {a, b}, [=](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_target(ia)) *ga += g;
    if (Tensor* gb = t.grad_target(ib)) view(*gb) -= view(g);
  });
}

Var mul(Var a, Var b) {
  require_same(a, b, "mul");
  Tensor y(a.rows(), a.cols());
  view(y) = view(a.value()).cwiseProduct(view(b.value()));
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("mul", std::move(y), {a, b}, [=](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_target(ia)) view(*ga) += view(g).cwiseProduct(view(t.value(ib)));
    if (Tensor* gb = t.grad_target(ib)) view(*gb) += view(g).cwiseProduct(view(t.value(ia)));
  });
}

Var scale(Var a, double s) {
  Tensor y = a.value();
  y *= s;
  const std::size_t ia = a.id();
  return a.tape().record("scale", std::move(y), {a}, [=](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_target(ia)) view(*ga) += s * view(g);
  });
}

Var add_scalar(Var a, double s) {
  Tensor y = a.value();
  for (double& v : y.values()) v += s;
  const std::size_t ia = a.id();
  return a.tape().record("add_scalar", std::move(y), {a}, [=](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_target(ia)) *ga += g;
  });
}

Var one_minus(Var a) { return add_scalar(scale(a, -1.0), 1.0); }

Var sigmoid(Var a) {
  return unary("sigmoid", a, stable_sigmoid, [](double x) {
    const double s = stable_sigmoid(x);
    return s * (1.0 - s);
  });
}

Var tanh(Var a) {
  return unary("tanh", a, [](double x) { return std::tanh(x); }, [](double x) {
    const double y = std::tanh(x);
    return 1.0 - y * y;
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw ShapeError("concat_cols: row count mismatch");
    cols += p.cols();
  }
  Tensor y(rows, cols);
  std::vector<std::size_t> offsets, ids;
  std::size_t off = 0;
  for (const Var& p : parts) {
    view(y).middleCols(static_cast<Eigen::Index>(off), static_cast<Eigen::Index>(p.cols())) = view(p.value());
    offsets.push_back(off);
    ids.push_back(p.id());
    off += p.cols();
  }
  return parts.front().tape().record("concat_cols", std::move(y), parts, [=](Tape& t, const Tensor& g) {
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (Tensor* gp = t.grad_target(ids[k])) {
        view(*gp) += view(g).middleCols(static_cast<Eigen::Index>(offsets[k]), static_cast<Eigen::Index>(gp->cols()));
      }
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw ShapeError("concat_rows: column count mismatch");
    rows += p.rows();
  }
  Tensor y(rows, cols);
  std::vector<std::size_t> offsets, ids;
  std::size_t off = 0;
  for (const Var& p : parts) {
    std::copy(p.value().values().begin(), p.value().values().end(), y.data() + off * cols);
    offsets.push_back(off);
    ids.push_back(p.id());
    off += p.rows();
  }
  return parts.front().tape().record("concat_rows", std::move(y), parts, [=](Tape& t, const Tensor& g) {
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (Tensor* gp = t.grad_target(ids[k])) {
        const double* src = g.data() + offsets[k] * cols;
        for (std::size_t i = 0; i < gp->size(); ++i) (*gp)[i] += src[i];
      }
    }
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  if (begin > end || end > a.cols()) throw ShapeError("slice_cols: range out of bounds");
  Tensor y(a.rows(), end - begin);
  view(y) = view(a.value()).middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
  const std::size_t ia = a.id();
  return a.tape().record("slice_cols", std::move(y), {a}, [=](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_target(ia)) {
      view(*ga).middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)) += view(g);
    }
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t end) {
  if (begin > end || end > a.rows()) throw ShapeError("slice_rows: range out of bounds");
  const std::size_t cols = a.cols();
  Tensor y(end - begin, cols);
  std::copy(a.value().data() + begin * cols, a.value().data() + end * cols, y.data());
  const std::size_t ia = a.id();
  return a.tape().record("slice_rows", std::move(y), {a}, [=](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_target(ia)) {
      double* dst = ga->data() + begin * cols;
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    }
  });
}

Var gather_rows(Var a, const std::vector<std::size_t>& rows) {
  const std::size_t cols = a.cols();
  Tensor y(rows.size(), cols);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= a.rows()) throw ShapeError("gather_rows: index out of range");
    std::copy_n(a.value().data() + rows[k] * cols, cols, y.data() + k * cols);
  }
  const std::size_t ia = a.id();
  return a.tape().record("gather_rows", std::move(y), {a}, [=](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_target(ia)) {
      for (std::size_t k = 0; k < rows.size(); ++k) {
        for (std::size_t c = 0; c < cols; ++c) (*ga)(rows[k], c) += g(k, c);
      }
    }
  });
}

Var mean_rows(Var a) {
  if (a.rows() == 0) throw ShapeError("mean_rows: empty input");
  const double inv = 1.0 / static_cast<double>(a.rows());
  Tensor y(1, a.cols());
  view(y).row(0) = view(a.value()).colwise().sum() * inv;
  const std::size_t ia = a.id();
  return a.tape().record("mean_rows", std::move(y), {a}, [=](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_target(ia)) view(*ga).rowwise() += inv * view(g).row(0);
  });
}

Var broadcast_rows(Var a, std::size_t n) {
  if (a.rows() != 1) throw ShapeError("broadcast_rows: expected a single row, got " + shape_string(a.value()));
  Tensor y(n, a.cols());
  view(y).rowwise() = view(a.value()).row(0);
  const std::size_t ia = a.id();
  return a.tape().record("broadcast_rows", std::move(y), {a}, [=](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_target(ia)) view(*ga).row(0) += view(g).colwise().sum();
  });
}

Var colsum_broadcast(Var a) {
  Tensor y(a.rows(), a.cols());
  view(y).rowwise() = view(a.value()).colwise().sum();
  const std::size_t ia = a.id();
  return a.tape().record("colsum_broadcast", std::move(y), {a}, [=](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_target(ia)) view(*ga).rowwise() += view(g).colwise().sum();
  });
}

Var row_scale(Var a, const std::vector<double>& scales) {
  if (scales.size() != a.rows()) throw ShapeError("row_scale: scale count does not match rows");
  Tensor y = a.value();
  for (std::size_t r = 0; r < y.rows(); ++r) {
    for (double& v : y.row_span(r)) v *= scales[r];
  }
  const std::size_t ia = a.id();
  return a.tape().record("row_scale", std::move(y), {a}, [=](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_target(ia)) {
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) (*ga)(r, c) += scales[r] * g(r, c);
      }
    }
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const std::size_t ia = a.id();
  return a.tape().record("sum", Tensor(1, 1, s), {a}, [=](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_target(ia)) {
      for (double& v : ga->values()) v += g[0];
    }
  });
}

Var mask_diagonal(Var a) {
  if (a.rows() != a.cols()) throw ShapeError("mask_diagonal: matrix is not square");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.rows(); ++i) y(i, i) = 0.0;
  const std::size_t ia = a.id();
  return a.tape().record("mask_diagonal", std::move(y), {a}, [=](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_target(ia)) {
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) {
          if (r != c) (*ga)(r, c) += g(r, c);
        }
      }
    }
  });
}

Var spmm(const SparseMatrix& s, Var a) {
  if (s.cols != a.rows()) throw ShapeError("spmm: sparse cols do not match input rows");
  const std::size_t cols = a.cols();
  Tensor y(s.rows, cols);
  const Tensor& A = a.value();
  for (std::size_t r = 0; r < s.rows; ++r) {
    double* out = y.data() + r * cols;
    for (std::size_t k = s.row_ptr[r]; k < s.row_ptr[r + 1]; ++k) {
      const double* in = A.data() + s.col[k] * cols;
      const double w = s.val[k];
      for (std::size_t c = 0; c < cols; ++c) out[c] += w * in[c];
    }
  }
  const std::size_t ia = a.id();
  return a.tape().record("spmm", std::move(y), {a}, [=](Tape& t, const Tensor& g) {
    Tensor* ga = t.grad_target(ia);
    if (!ga) return;
    for (std::size_t r = 0; r < s.rows; ++r) {
      const double* gr = g.data() + r * cols;
      for (std::size_t k = s.row_ptr[r]; k < s.row_ptr[r + 1]; ++k) {
        double* dst = ga->data() + s.col[k] * cols;
        const double w = s.val[k];
        for (std::size_t c = 0; c < cols; ++c) dst[c] += w * gr[c];
      }
    }
  });
}

Var segment_max(Var scores, const std::vector<std::vector<std::size_t>>& groups,
                std::vector<std::size_t>* argmax) {
  if (scores.cols() != 1) throw ShapeError("segment_max: expected a column of scores");
  const Tensor& s = scores.value();
  Tensor y(groups.size(), 1);
  std::vector<std::size_t> best(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) throw ShapeError("segment_max: empty group");
    std::size_t arg = groups[g].front();
    for (std::size_t i : groups[g]) {
      if (i >= s.rows()) throw ShapeError("segment_max: row index out of range");
      if (s(i, 0) > s(arg, 0)) arg = i;
    }
    best[g] = arg;
    y(g, 0) = s(arg, 0);
  }
  if (argmax) *argmax = best;
  const std::size_t is = scores.id();
  return scores.tape().record("segment_max", std::move(y), {scores}, [=](Tape& t, const Tensor& g) {
    if (Tensor* gs = t.grad_target(is)) {
      for (std::size_t k = 0; k < best.size(); ++k) (*gs)(best[k], 0) += g(k, 0);
    }
  });
}

Var cross_entropy(Var logits, std::size_t target) {
  const Tensor& z = logits.value();
  if (z.cols() != 1 || z.rows() == 0) throw ShapeError("cross_entropy: expected a non-empty column");
  if (target >= z.rows()) throw ShapeError("cross_entropy: target out of range");
  double m = -std::numeric_limits<double>::infinity();
  for (double v : z.values()) m = std::max(m, v);
  double acc = 0.0;
  for (double v : z.values()) acc += std::exp(v - m);
  const double lse = m + std::log(acc);
  const std::size_t iz = logits.id();
  return logits.tape().record("cross_entropy", Tensor(1, 1, lse - z[target]), {logits},
                              [=](Tape& t, const Tensor& g) {
                                Tensor* gz = t.grad_target(iz);
                                if (!gz) return;
                                const Tensor& zz = t.value(iz);
                                for (std::size_t i = 0; i < zz.size(); ++i) {
                                  const double p = std::exp(zz[i] - lse);
                                  (*gz)[i] += g[0] * (p - (i == target ? 1.0 : 0.0));
                                }
                              });
}

Var dropout(Var a, double rate, std::uint64_t seed, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout: rate must lie in [0, 1)");
  if (!training || rate == 0.0) return a;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(a.value().size());
  for (double& m : mask) m = u(rng) < rate ? 0.0 : keep_scale;
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= mask[i];
  const std::size_t ia = a.id();
  return a.tape().record("dropout", std::move(y), {a}, [=](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_target(ia)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * mask[i];
    }
  });
}

}  // namespace egcn
