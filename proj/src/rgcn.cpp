#include "egcn/rgcn.hpp"

#include <cmath>

namespace egcn {

std::string_view edge_mode_name(EdgeMode m) {
  switch (m) {
    case EdgeMode::typed: return "typed";
    case EdgeMode::untyped: return "untyped";
    case EdgeMode::induced: return "induced";
  }
  return "?";
}

std::optional<EdgeMode> parse_edge_mode(std::string_view name) {
  if (name == "typed") return EdgeMode::typed;
  if (name == "untyped") return EdgeMode::untyped;
  if (name == "induced") return EdgeMode::induced;
  return std::nullopt;
}

RgcnParams::RgcnParams(std::size_t dim)
    : self("rgcn.self", dim, dim),
      relation{AffineBlock("rgcn.doc_based", dim, dim), AffineBlock("rgcn.match", dim, dim),
               AffineBlock("rgcn.coref", dim, dim), AffineBlock("rgcn.complement", dim, dim)},
      gate("rgcn.gate", 2 * dim, dim) {}

void RgcnParams::init(std::mt19937_64& rng) {
  self.init_xavier(rng);
  for (AffineBlock& r : relation) r.init_xavier(rng);
  gate.init_xavier(rng);
}

void RgcnParams::register_parameters(ParameterList& list) {
  self.register_parameters(list);
  for (AffineBlock& r : relation) r.register_parameters(list);
  gate.register_parameters(list);
}

InducedEdgeParams::InducedEdgeParams(std::size_t dim) : weight("edges.bilinear", Tensor(dim, dim)) {}

void InducedEdgeParams::init(std::mt19937_64& rng) {
  const std::size_t d = weight.value().rows();
  const double limit = std::sqrt(6.0 / static_cast<double>(2 * d));
  std::uniform_real_distribution<double> u(-limit, limit);
  for (double& w : weight.value().values()) w = u(rng);
}

void InducedEdgeParams::register_parameters(ParameterList& list) { list.add(weight); }

namespace {

SparseMatrix symmetric_adjacency(std::size_t n, const std::vector<NodePair>& pairs) {
  std::vector<SparseMatrix::Triplet> entries;
  entries.reserve(2 * pairs.size());
  for (const auto& [i, j] : pairs) {
    entries.push_back({i, j, 1.0});
    entries.push_back({j, i, 1.0});
  }
  return SparseMatrix::from_triplets(n, n, std::move(entries));
}

}  // namespace

PropagationPlan make_plan(const EntityGraph& graph, EdgeMode mode) {
  PropagationPlan plan;
  const std::size_t n = graph.node_count();
  plan.nodes = n;
  plan.mode = mode;
  plan.inverse_degree.assign(n, 0.0);
  if (mode != EdgeMode::typed) {
    if (n > 1) plan.inverse_degree.assign(n, 1.0 / static_cast<double>(n - 1));
    return plan;
  }
  const auto neighbours = graph.neighbours();
  for (std::size_t i = 0; i < n; ++i) {
    if (!neighbours[i].empty()) plan.inverse_degree[i] = 1.0 / static_cast<double>(neighbours[i].size());
  }
  for (RelationType r : kRelations) {
    const auto k = static_cast<std::size_t>(r);
    if (!graph.enabled[k]) continue;
    if (r == RelationType::complement && graph.complement_implicit()) continue;
    plan.adjacency[k] = symmetric_adjacency(n, graph.edges[k]);
  }
  if (graph.complement_implicit()) {
    std::vector<SparseMatrix::Triplet> entries;
    for (RelationType r : kRelations) {
      const auto k = static_cast<std::size_t>(r);
      if (r == RelationType::complement || !graph.enabled[k]) continue;
      for (const auto& [i, j] : graph.edges[k]) {
        entries.push_back({i, j, 1.0});
        entries.push_back({j, i, 1.0});
      }
    }
    SparseMatrix m = SparseMatrix::from_triplets(n, n, std::move(entries));
    for (double& v : m.val) v = 1.0;  // a pair counts once however many relations carry it
    plan.complement_exclusion = std::move(m);
  }
  return plan;
}

Var induced_edge_weights(Var x_hat, const InducedEdgeParams& edge_params) {
  Tape& t = x_hat.tape();
  const Var scores = matmul_nt(matmul(x_hat, t.param(edge_params.weight)), x_hat);
  return mask_diagonal(sigmoid(scores));
}

Var layer_update(Var h, const PropagationPlan& plan, const RgcnParams& params, Var edge_weights) {
  if (h.rows() != plan.nodes) throw ShapeError("layer_update: node count does not match the plan");
  Var messages;
  auto accumulate = [&messages](Var term) { messages = messages.valid() ? add(messages, term) : term; };
  const std::size_t n = plan.nodes;

  switch (plan.mode) {
    case EdgeMode::typed:
      for (std::size_t k = 0; k < kRelationCount; ++k) {
        if (plan.adjacency[k]) {
          if (plan.adjacency[k]->nnz() == 0) continue;
          accumulate(spmm(*plan.adjacency[k], params.relation[k](h)));
        }
      }
      if (plan.complement_exclusion) {
        const Var m = params.relation[static_cast<std::size_t>(RelationType::complement)](h);
        accumulate(sub(sub(colsum_broadcast(m), m), spmm(*plan.complement_exclusion, m)));
      }
      break;
    case EdgeMode::untyped:
      if (n > 1) {
        const Var m = params.relation[0](h);
        accumulate(sub(colsum_broadcast(m), m));
      }
      break;
    case EdgeMode::induced:
      if (!edge_weights.valid()) throw std::invalid_argument("layer_update: induced mode needs edge weights");
      if (n > 1) accumulate(matmul(edge_weights, params.relation[0](h)));
      break;
  }

  Var u = params.self(h);
  if (messages.valid()) u = add(u, row_scale(messages, plan.inverse_degree));
  const Var a = sigmoid(params.gate(concat_cols({u, h})));
  return add(mul(tanh(u), a), mul(h, one_minus(a)));
}

Var propagate(Var x_hat, const PropagationPlan& plan, const RgcnParams& params, std::size_t layers,
              const InducedEdgeParams* edge_params) {
  Var weights;
  if (plan.mode == EdgeMode::induced && layers > 0) {
    if (!edge_params) throw std::invalid_argument("propagate: induced mode needs edge parameters");
    weights = induced_edge_weights(x_hat, *edge_params);
  }
  Var h = x_hat;
  for (std::size_t l = 0; l < layers; ++l) h = layer_update(h, plan, params, weights);
  return h;
}

Tensor propagate(const Tensor& x_hat, const EntityGraph& graph, const RgcnParams& params, std::size_t layers,
                 EdgeMode mode, const InducedEdgeParams* edge_params) {
  Tape tape;
  const PropagationPlan plan = make_plan(graph, mode);
  return propagate(tape.constant(x_hat), plan, params, layers, edge_params).value();
}

}  // namespace egcn
