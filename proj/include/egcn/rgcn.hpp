#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "egcn/graph.hpp"
#include "egcn/nn.hpp"

namespace egcn {

/// typed: one transformation per relation over the heuristic edges.
/// untyped: complete graph, one shared transformation.
/// induced: complete graph, messages weighted by σ(x̂_iᵀ W_e x̂_j).
enum class EdgeMode : std::uint8_t { typed, untyped, induced };
std::string_view edge_mode_name(EdgeMode m);
std::optional<EdgeMode> parse_edge_mode(std::string_view name);

struct RgcnParams {
  AffineBlock self;                                 // f_s
  std::array<AffineBlock, kRelationCount> relation; // f_r; untyped and induced use relation[0]
  AffineBlock gate;                                 // f_a, 2d → d

  RgcnParams() = default;
  explicit RgcnParams(std::size_t dim);

  std::size_t dim() const { return self.in_dim(); }
  void init(std::mt19937_64& rng);
  void register_parameters(ParameterList& list);
};

struct InducedEdgeParams {
  Parameter weight;  // W_e, d × d

  InducedEdgeParams() = default;
  explicit InducedEdgeParams(std::size_t dim);
  void init(std::mt19937_64& rng);
  void register_parameters(ParameterList& list);
};

/// Aggregation structure derived once per graph and reused by every layer.
struct PropagationPlan {
  std::size_t nodes = 0;
  EdgeMode mode = EdgeMode::typed;
  /// 1/|N_i|, or 0 for a node without neighbours.
  std::vector<double> inverse_degree;
  /// Symmetric 0/1 adjacency for each relation with materialized edges.
  std::array<std::optional<SparseMatrix>, kRelationCount> adjacency;
  /// Implicit COMPLEMENT: adjacency of the union of the other enabled relations,
  /// subtracted from the all-pairs sum.
  std::optional<SparseMatrix> complement_exclusion;
};

PropagationPlan make_plan(const EntityGraph& graph, EdgeMode mode);

/// Edge weights for the induced variant (n×n, zero diagonal), computed once from x̂.
Var induced_edge_weights(Var x_hat, const InducedEdgeParams& edge_params);

/// One gated layer. `edge_weights` is required for EdgeMode::induced and ignored otherwise.
Var layer_update(Var h, const PropagationPlan& plan, const RgcnParams& params, Var edge_weights = {});

/// `layers` applications of layer_update with shared parameters; 0 returns x̂.
Var propagate(Var x_hat, const PropagationPlan& plan, const RgcnParams& params, std::size_t layers,
              const InducedEdgeParams* edge_params = nullptr);

/// Convenience without a caller-managed tape.
Tensor propagate(const Tensor& x_hat, const EntityGraph& graph, const RgcnParams& params, std::size_t layers,
                 EdgeMode mode = EdgeMode::typed, const InducedEdgeParams* edge_params = nullptr);

}  // namespace egcn
