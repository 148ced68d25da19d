#pragma once

#include <cmath>
#include <vector>

#include "egcn/graph.hpp"
#include "egcn/rgcn.hpp"

namespace egcn::testing {

using Matrix = std::vector<std::vector<double>>;

inline Matrix to_matrix(const Tensor& t) {
  Matrix m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = t(i, j);
  }
  return m;
}

inline std::vector<double> apply_block(const AffineBlock& b, const std::vector<double>& x) {
  const Tensor& w = b.weight.value();
  std::vector<double> y(w.rows());
  for (std::size_t o = 0; o < w.rows(); ++o) {
    double acc = b.bias.value()[o];
    for (std::size_t i = 0; i < w.cols(); ++i) acc += w(o, i) * x[i];
    y[o] = acc;
  }
  return y;
}

/// Relation sets R_ij as dense boolean tensors, COMPLEMENT derived from the
/// other enabled relations regardless of how the graph stores it.
inline std::vector<Matrix> dense_relations(const EntityGraph& g) {
  const std::size_t n = g.node_count();
  std::vector<Matrix> rel(kRelationCount, Matrix(n, std::vector<double>(n, 0.0)));
  for (std::size_t r = 0; r < 3; ++r) {
    if (!g.enabled[r]) continue;
    for (const auto& [i, j] : g.edges[r]) rel[r][i][j] = rel[r][j][i] = 1.0;
  }
  if (g.enabled[3]) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j && rel[0][i][j] + rel[1][i][j] + rel[2][i][j] == 0.0) rel[3][i][j] = 1.0;
      }
    }
  }
  return rel;
}

/// One gated layer written directly from the per-node update rule.
inline Matrix dense_layer(const Matrix& h, const EntityGraph& g, const RgcnParams& p) {
  const std::size_t n = h.size();
  const std::size_t d = p.dim();
  const std::vector<Matrix> rel = dense_relations(g);
  Matrix out(n, std::vector<double>(d));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> u = apply_block(p.self, h[i]);
    std::vector<double> msg(d, 0.0);
    std::size_t neighbours = 0;
    for (std::size_t j = 0; j < n; ++j) {
      bool any = false;
      for (std::size_t r = 0; r < kRelationCount; ++r) {
        if (rel[r][i][j] == 0.0) continue;
        any = true;
        const std::vector<double> m = apply_block(p.relation[r], h[j]);
        for (std::size_t k = 0; k < d; ++k) msg[k] += m[k];
      }
      if (any) ++neighbours;
    }
    if (neighbours > 0) {
      for (std::size_t k = 0; k < d; ++k) u[k] += msg[k] / static_cast<double>(neighbours);
    }
    std::vector<double> uh(u);
    uh.insert(uh.end(), h[i].begin(), h[i].end());
    const std::vector<double> pre = apply_block(p.gate, uh);
    for (std::size_t k = 0; k < d; ++k) {
      const double a = 1.0 / (1.0 + std::exp(-pre[k]));
      out[i][k] = std::tanh(u[k]) * a + h[i][k] * (1.0 - a);
    }
  }
  return out;
}

inline Matrix dense_propagate(Matrix h, const EntityGraph& g, const RgcnParams& p, std::size_t layers) {
  for (std::size_t l = 0; l < layers; ++l) h = dense_layer(h, g, p);
  return h;
}

inline double max_abs_diff(const Matrix& a, const Tensor& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a[i].size(); ++j) m = std::max(m, std::abs(a[i][j] - b(i, j)));
  }
  return m;
}

/// Random graph on n mention nodes with overlapping DOC/MATCH/COREF pairs.
template <class Rng>
EntityGraph random_graph(std::size_t n, Rng& rng, bool random_enabled = true) {
  std::uniform_int_distribution<std::size_t> docs(0, 2), surfaces(0, 3), chains(0, 4);
  std::vector<Mention> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    Mention& m = nodes[i];
    m.doc = docs(rng);
    m.start = i;
    m.end = i + 1;
    const std::size_t s = surfaces(rng);
    m.surface = "e" + std::to_string(s);
    m.entity = m.surface;
    m.candidate = s;
    m.source = chains(rng) == 0 ? MentionSource::coref : MentionSource::exact;
    const std::size_t c = chains(rng);
    if (c < 2) m.chains = {c};
  }
  GraphOptions options;
  if (random_enabled) {
    std::bernoulli_distribution coin(0.8);
    for (bool& e : options.enabled) e = coin(rng);
  }
  if (std::bernoulli_distribution(0.3)(rng)) options.complement_threshold = 0;
  return build_edges(std::move(nodes), 4, options);
}

}  // namespace egcn::testing
