#include "egcn/nn.hpp"

#include <cmath>

namespace egcn {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

AffineBlock::AffineBlock(const std::string& name, std::size_t in, std::size_t out)
    : weight(name + ".weight", Tensor(out, in)), bias(name + ".bias", Tensor(1, out)) {}

void AffineBlock::init_xavier(std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in_dim() + out_dim()));
  std::uniform_real_distribution<double> u(-limit, limit);
  for (double& w : weight.value().values()) w = u(rng);
  bias.value().fill(0.0);
}

Var AffineBlock::operator()(Var x) const {
  Tape& t = x.tape();
  return affine(x, t.param(weight), t.param(bias));
}

void AffineBlock::register_parameters(ParameterList& list) {
  list.add(weight);
  list.add(bias);
}

LstmCell::LstmCell(const std::string& name, std::size_t in, std::size_t hidden)
    : input(name + ".input", in, 4 * hidden), recurrent(name + ".recurrent", Tensor(4 * hidden, hidden)) {}

void LstmCell::init(std::mt19937_64& rng) {
  input.init_xavier(rng);
  const std::size_t h = hidden();
  const double limit = std::sqrt(6.0 / static_cast<double>(h + 4 * h));
  std::uniform_real_distribution<double> u(-limit, limit);
  for (double& w : recurrent.value().values()) w = u(rng);
  Tensor& b = input.bias.value();
  for (std::size_t k = h; k < 2 * h; ++k) b[k] = 1.0;
}

Var LstmCell::run(Var seq, bool reverse) const {
  Tape& t = seq.tape();
  const std::size_t steps = seq.rows();
  const std::size_t h = hidden();
  if (steps == 0) throw ShapeError("lstm: empty sequence");
  const Var projected = input(seq);  // T × 4H
  const Var w_rec = t.param(recurrent);
  Var state = t.constant(Tensor(1, h));
  Var cell = t.constant(Tensor(1, h));
  std::vector<Var> outputs(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t pos = reverse ? steps - 1 - k : k;
    const Var gates = add(slice_rows(projected, pos, pos + 1), matmul_nt(state, w_rec));
    const Var i = sigmoid(slice_cols(gates, 0, h));
    const Var f = sigmoid(slice_cols(gates, h, 2 * h));
    const Var g = tanh(slice_cols(gates, 2 * h, 3 * h));
    const Var o = sigmoid(slice_cols(gates, 3 * h, 4 * h));
    cell = add(mul(f, cell), mul(i, g));
    state = mul(o, tanh(cell));
    outputs[pos] = state;
  }
  return concat_rows(outputs);
}

void LstmCell::register_parameters(ParameterList& list) {
  input.register_parameters(list);
  list.add(recurrent);
}

BiLstm::BiLstm(const std::string& name, std::size_t in, std::size_t hidden)
    : forward(name + ".fwd", in, hidden), backward(name + ".bwd", in, hidden) {}

void BiLstm::init(std::mt19937_64& rng) {
  forward.init(rng);
  backward.init(rng);
}

BiLstm::Output BiLstm::run(Var seq) const {
  const Var fwd = forward.run(seq, false);
  const Var bwd = backward.run(seq, true);
  const std::size_t steps = seq.rows();
  return Output{concat_cols({fwd, bwd}), slice_rows(fwd, steps - 1, steps), slice_rows(bwd, 0, 1)};
}

void BiLstm::register_parameters(ParameterList& list) {
  forward.register_parameters(list);
  backward.register_parameters(list);
}

AdamState::AdamState(const ParameterList& params, AdamConfig cfg) : config(cfg) {
  for (const Parameter* p : params) {
    first_moment.push_back(Tensor::zeros_like(p->value()));
    second_moment.push_back(Tensor::zeros_like(p->value()));
  }
}

void adam_step(const ParameterList& params, const Gradients& grads, AdamState& state) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size()) {
    throw ShapeError("adam: parameter, gradient and state counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!grads[i].same_shape(params[i].value()) || !state.first_moment[i].same_shape(params[i].value())) {
      throw ShapeError("adam: shape mismatch for '" + params[i].name() + "'");
    }
  }
  ++state.step;
  const AdamConfig& c = state.config;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& theta = params[i].value();
    Tensor& m = state.first_moment[i];
    Tensor& v = state.second_moment[i];
    const Tensor& g = grads[i];
    for (std::size_t k = 0; k < theta.size(); ++k) {
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      theta[k] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace egcn
