#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "egcn/embeddings.hpp"
#include "egcn/graph.hpp"
#include "egcn/nn.hpp"

namespace egcn {

enum class SpanPooling : std::uint8_t { mean, first, last };
std::string_view pooling_name(SpanPooling p);
std::optional<SpanPooling> parse_pooling(std::string_view name);

struct EncoderDims {
  std::size_t raw = 3072;          // precomputed token vector size
  std::size_t query_hidden1 = 256; // per direction
  std::size_t query_hidden2 = 128; // per direction; q has twice this
  std::size_t projection = 256;    // projected mention size
  std::size_t fx_hidden = 1024;
  std::size_t node = 512;          // x̂ size

  std::size_t query_dim() const { return 2 * query_hidden2; }
  friend bool operator==(const EncoderDims&, const EncoderDims&) = default;
};

struct EncoderParams {
  BiLstm query1;
  BiLstm query2;
  AffineBlock projection;  // raw → projection
  AffineBlock fx1;         // projection + K → fx_hidden
  AffineBlock fx2;         // fx_hidden → node

  EncoderParams() = default;
  explicit EncoderParams(const EncoderDims& dims);

  void init(std::mt19937_64& rng);
  void register_parameters(ParameterList& list);
};

/// Two stacked bidirectional LSTMs over the query token vectors (T×raw);
/// returns [final forward, final backward] of the second layer as a 1×K row.
Var encode_query(Var tokens, const EncoderParams& params);

/// Pools each mention's span out of its document's token vectors (n×raw).
/// Throws CoverageError naming (doc, index) if a span reaches past the vectors.
Tensor pool_mentions(const std::vector<Mention>& mentions, const std::vector<Tensor>& documents, SpanPooling pooling);

/// Affine projection of pooled mention vectors.
Var encode_mentions(Var pooled, const EncoderParams& params);

/// f_x: tanh(fx2(tanh(fx1([x_i, q])))) for every row x_i.
Var query_dependent_encoding(Var q, Var projected, const EncoderParams& params);

}  // namespace egcn
