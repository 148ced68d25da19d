#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "egcn/autodiff.hpp"

namespace egcn {

/// splitmix64 finaliser; used to derive independent seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0);

/// Affine map y = W·x + b applied row-wise to an n×in input.
struct AffineBlock {
  Parameter weight;  // out × in
  Parameter bias;    // 1 × out

  AffineBlock() = default;
  AffineBlock(const std::string& name, std::size_t in, std::size_t out);

  std::size_t in_dim() const { return weight.value().cols(); }
  std::size_t out_dim() const { return weight.value().rows(); }

  /// Uniform Xavier/Glorot weights, zero bias.
  void init_xavier(std::mt19937_64& rng);
  Var operator()(Var x) const;
  void register_parameters(ParameterList& list);
};

/// Single-direction LSTM with gate order [input, forget, candidate, output].
struct LstmCell {
  AffineBlock input;    // in → 4H, carries the gate bias
  Parameter recurrent;  // 4H × H

  LstmCell() = default;
  LstmCell(const std::string& name, std::size_t in, std::size_t hidden);

  std::size_t hidden() const { return recurrent.value().cols(); }
  std::size_t in_dim() const { return input.in_dim(); }

  /// Xavier weights; forget-gate bias set to 1.
  void init(std::mt19937_64& rng);
  /// Runs over the rows of `seq` (T×in) in the given direction, returning the
  /// T×H hidden outputs aligned with the input positions.
  Var run(Var seq, bool reverse) const;
  void register_parameters(ParameterList& list);
};

/// Forward and backward LSTMs whose outputs are concatenated per position.
struct BiLstm {
  LstmCell forward;
  LstmCell backward;

  BiLstm() = default;
  BiLstm(const std::string& name, std::size_t in, std::size_t hidden);

  void init(std::mt19937_64& rng);
  struct Output {
    Var sequence;       // T × 2H, [forward_t, backward_t]
    Var final_forward;  // 1 × H, forward state after the last position
    Var final_backward; // 1 × H, backward state after the first position
  };
  Output run(Var seq) const;
  void register_parameters(ParameterList& list);
};

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;

  AdamState() = default;
  AdamState(const ParameterList& params, AdamConfig cfg);
};

/// Bias-corrected Adam update in place.
void adam_step(const ParameterList& params, const Gradients& grads, AdamState& state);

}  // namespace egcn
