#include "egcn/encoder.hpp"

namespace egcn {

std::string_view pooling_name(SpanPooling p) {
  switch (p) {
    case SpanPooling::mean: return "mean";
    case SpanPooling::first: return "first";
    case SpanPooling::last: return "last";
  }
  return "?";
}

std::optional<SpanPooling> parse_pooling(std::string_view name) {
  if (name == "mean") return SpanPooling::mean;
  if (name == "first") return SpanPooling::first;
  if (name == "last") return SpanPooling::last;
  return std::nullopt;
}

EncoderParams::EncoderParams(const EncoderDims& dims)
    : query1("query.lstm1", dims.raw, dims.query_hidden1),
      query2("query.lstm2", 2 * dims.query_hidden1, dims.query_hidden2),
      projection("projection", dims.raw, dims.projection),
      fx1("fx.1", dims.projection + dims.query_dim(), dims.fx_hidden),
      fx2("fx.2", dims.fx_hidden, dims.node) {}

void EncoderParams::init(std::mt19937_64& rng) {
  query1.init(rng);
  query2.init(rng);
  projection.init_xavier(rng);
  fx1.init_xavier(rng);
  fx2.init_xavier(rng);
}

void EncoderParams::register_parameters(ParameterList& list) {
  query1.register_parameters(list);
  query2.register_parameters(list);
  projection.register_parameters(list);
  fx1.register_parameters(list);
  fx2.register_parameters(list);
}

Var encode_query(Var tokens, const EncoderParams& params) {
  if (tokens.rows() == 0) throw ShapeError("encode_query: empty query");
  const BiLstm::Output first = params.query1.run(tokens);
  const BiLstm::Output second = params.query2.run(first.sequence);
  return concat_cols({second.final_forward, second.final_backward});
}

Tensor pool_mentions(const std::vector<Mention>& mentions, const std::vector<Tensor>& documents, SpanPooling pooling) {
  const std::size_t dim = documents.empty() ? 0 : documents.front().cols();
  Tensor out(mentions.size(), dim);
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    const Mention& m = mentions[i];
    if (m.doc >= documents.size()) throw CoverageError("mention refers to missing document " + std::to_string(m.doc));
    const Tensor& doc = documents[m.doc];
    if (m.end <= m.start) throw ShapeError("mention has an empty span");
    if (m.end > doc.rows()) {
      throw CoverageError("missing token vector at document " + std::to_string(m.doc) + ", index " +
                          std::to_string(doc.rows()));
    }
    auto row = out.row_span(i);
    auto add_token = [&](std::size_t t, double w) {
      auto src = doc.row_span(t);
      for (std::size_t c = 0; c < dim; ++c) row[c] += w * src[c];
    };
    switch (pooling) {
      case SpanPooling::mean: {
        const double w = 1.0 / static_cast<double>(m.end - m.start);
        for (std::size_t t = m.start; t < m.end; ++t) add_token(t, w);
        break;
      }
      case SpanPooling::first: add_token(m.start, 1.0); break;
      case SpanPooling::last: add_token(m.end - 1, 1.0); break;
    }
  }
  return out;
}

Var encode_mentions(Var pooled, const EncoderParams& params) { return params.projection(pooled); }

Var query_dependent_encoding(Var q, Var projected, const EncoderParams& params) {
  if (q.rows() != 1) throw ShapeError("query encoding must be a single row");
  const Var joined = concat_cols({projected, broadcast_rows(q, projected.rows())});
  return tanh(params.fx2(tanh(params.fx1(joined))));
}

}  // namespace egcn
