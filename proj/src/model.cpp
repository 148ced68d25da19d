#include "egcn/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace egcn {

using nlohmann::json;

std::string_view score_head_name(ScoreHead h) { return h == ScoreHead::affine ? "affine" : "mlp"; }

std::optional<ScoreHead> parse_score_head(std::string_view name) {
  if (name == "affine") return ScoreHead::affine;
  if (name == "mlp") return ScoreHead::mlp;
  return std::nullopt;
}

std::string config_to_json(const ModelConfig& c) {
  json enabled = json::object();
  for (RelationType r : kRelations) enabled[std::string(relation_name(r))] = c.graph.enabled[static_cast<std::size_t>(r)];
  const json j = {
      {"dims",
       {{"raw", c.dims.raw},
        {"query_hidden1", c.dims.query_hidden1},
        {"query_hidden2", c.dims.query_hidden2},
        {"projection", c.dims.projection},
        {"fx_hidden", c.dims.fx_hidden},
        {"node", c.dims.node}}},
      {"layers", c.layers},
      {"edge_mode", edge_mode_name(c.edge_mode)},
      {"score_head", score_head_name(c.score_head)},
      {"head_hidden", c.head_hidden},
      {"dropout", c.dropout},
      {"pooling", pooling_name(c.pooling)},
      {"graph", {{"enabled", enabled}, {"masked", c.graph.masked}, {"complement_threshold", c.graph.complement_threshold}}},
  };
  return j.dump();
}

ModelConfig config_from_json(std::string_view text) {
  ModelConfig c;
  try {
    const json j = json::parse(text);
    const json& d = j.at("dims");
    c.dims.raw = d.at("raw").get<std::size_t>();
    c.dims.query_hidden1 = d.at("query_hidden1").get<std::size_t>();
    c.dims.query_hidden2 = d.at("query_hidden2").get<std::size_t>();
    c.dims.projection = d.at("projection").get<std::size_t>();
    c.dims.fx_hidden = d.at("fx_hidden").get<std::size_t>();
    c.dims.node = d.at("node").get<std::size_t>();
    c.layers = j.at("layers").get<std::size_t>();
    const auto mode = parse_edge_mode(j.at("edge_mode").get<std::string>());
    const auto head = parse_score_head(j.at("score_head").get<std::string>());
    const auto pooling = parse_pooling(j.at("pooling").get<std::string>());
    if (!mode || !head || !pooling) throw DataError("model config: unknown enumeration value");
    c.edge_mode = *mode;
    c.score_head = *head;
    c.pooling = *pooling;
    c.head_hidden = j.at("head_hidden").get<std::vector<std::size_t>>();
    c.dropout = j.at("dropout").get<double>();
    const json& g = j.at("graph");
    for (RelationType r : kRelations) {
      c.graph.enabled[static_cast<std::size_t>(r)] = g.at("enabled").at(std::string(relation_name(r))).get<bool>();
    }
    c.graph.masked = g.at("masked").get<bool>();
    c.graph.complement_threshold = g.at("complement_threshold").get<std::size_t>();
  } catch (const json::exception& e) {
    throw DataError(std::string("model config: ") + e.what());
  }
  if (c.dims.raw == 0 || c.dims.node == 0 || c.dims.query_hidden1 == 0 || c.dims.query_hidden2 == 0 ||
      c.dims.projection == 0 || c.dims.fx_hidden == 0) {
    throw DataError("model config: zero dimension");
  }
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) throw DataError("model config: dropout outside [0, 1)");
  return c;
}

ModelParams::ModelParams(const ModelConfig& cfg)
    : config(cfg), encoder(cfg.dims), rgcn(cfg.dims.node) {
  const std::size_t in = cfg.dims.query_dim() + cfg.dims.node;
  if (cfg.score_head == ScoreHead::affine) {
    head.emplace_back("head.0", in, 1);
  } else {
    std::size_t prev = in;
    for (std::size_t k = 0; k < cfg.head_hidden.size(); ++k) {
      head.emplace_back("head." + std::to_string(k), prev, cfg.head_hidden[k]);
      prev = cfg.head_hidden[k];
    }
    head.emplace_back("head." + std::to_string(cfg.head_hidden.size()), prev, 1);
  }
  if (cfg.edge_mode == EdgeMode::induced) edges.emplace(cfg.dims.node);
}

void ModelParams::init(std::uint64_t master_seed) {
  seed = master_seed;
  std::mt19937_64 rng(mix_seed(master_seed, 1));
  encoder.init(rng);
  rgcn.init(rng);
  for (AffineBlock& b : head) b.init_xavier(rng);
  if (edges) edges->init(rng);
}

ParameterList ModelParams::parameters() {
  ParameterList list;
  encoder.register_parameters(list);
  rgcn.register_parameters(list);
  for (AffineBlock& b : head) b.register_parameters(list);
  if (edges) edges->register_parameters(list);
  return list;
}

std::vector<const Parameter*> ModelParams::parameters() const {
  ParameterList list = const_cast<ModelParams*>(this)->parameters();
  return {list.begin(), list.end()};
}

void round_to_float(ModelParams& params) {
  for (Parameter* p : params.parameters()) {
    for (double& v : p->value().values()) v = static_cast<double>(static_cast<float>(v));
  }
}

PreparedSample prepare_sample(const Sample& sample, const EmbeddingStore& store, const ModelConfig& config,
                              const CorefChains* chains) {
  if (store.dim() != config.dims.raw) {
    throw DataError("embedding dim " + std::to_string(store.dim()) + " does not match model input dim " +
                    std::to_string(config.dims.raw));
  }
  PreparedSample p;
  p.id = sample.id;
  p.relation = sample.query.relation;
  p.candidates = sample.candidates;
  p.gold = sample.answer_index();
  try {
    p.graph = build_graph(sample, chains, config.graph);
  } catch (const EmptyGraphError&) {
    p.graph = EntityGraph{};
    p.graph.enabled = config.graph.enabled;
    p.graph.candidate_mentions.assign(sample.candidates.size(), {});
  }
  p.plan = make_plan(p.graph, config.edge_mode);
  p.query = store.query(sample);
  if (p.query.rows() == 0) throw DataError("sample " + sample.id + ": empty query");
  std::vector<Tensor> documents;
  std::vector<bool> needed(sample.documents.size(), false);
  for (const Mention& m : p.graph.nodes) needed[m.doc] = true;
  for (std::size_t d = 0; d < sample.documents.size(); ++d) {
    documents.push_back(needed[d] ? store.document(sample, d) : Tensor(0, store.dim()));
  }
  p.pooled = pool_mentions(p.graph.nodes, documents, config.pooling);
  return p;
}

ForwardResult forward(Tape& tape, const ModelParams& params, const PreparedSample& sample, bool training,
                      std::uint64_t dropout_seed) {
  const ModelConfig& cfg = params.config;
  ForwardResult out;
  for (std::size_t c = 0; c < sample.graph.candidate_mentions.size(); ++c) {
    if (!sample.graph.candidate_mentions[c].empty()) out.scored.push_back(c);
  }
  const std::size_t n = sample.graph.node_count();
  if (n == 0 || out.scored.empty()) {
    out.scored.clear();
    return out;
  }
  const Var q = encode_query(tape.constant(sample.query), params.encoder);
  const Var projected = encode_mentions(tape.constant(sample.pooled), params.encoder);
  Var x_hat = query_dependent_encoding(q, projected, params.encoder);
  x_hat = dropout(x_hat, cfg.dropout, mix_seed(dropout_seed, 1), training);
  const Var h = propagate(x_hat, sample.plan, params.rgcn, cfg.layers, params.edges ? &*params.edges : nullptr);
  Var z = dropout(concat_cols({broadcast_rows(q, n), h}), cfg.dropout, mix_seed(dropout_seed, 2), training);
  for (std::size_t k = 0; k < params.head.size(); ++k) {
    z = params.head[k](z);
    if (k + 1 < params.head.size()) z = tanh(z);
  }
  out.node_scores = z;
  std::vector<std::vector<std::size_t>> groups;
  groups.reserve(out.scored.size());
  for (std::size_t c : out.scored) groups.push_back(sample.graph.candidate_mentions[c]);
  out.logits = segment_max(z, groups, &out.best_node);
  return out;
}

Prediction prediction_from_logits(std::vector<std::string> candidates, const std::vector<std::size_t>& scored,
                                  const std::vector<double>& logits, const std::vector<std::size_t>& best_node) {
  Prediction p;
  const std::size_t k = candidates.size();
  p.candidates = std::move(candidates);
  p.probabilities.assign(k, 0.0);
  p.best_node.assign(k, std::nullopt);
  if (scored.empty()) {
    p.answerable = false;
    if (k > 0) p.probabilities.assign(k, 1.0 / static_cast<double>(k));
    p.predicted = 0;
    return p;
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t s = 0; s < scored.size(); ++s) {
    const double e = std::exp(logits[s] - top);
    p.probabilities[scored[s]] = e;
    total += e;
    if (s < best_node.size()) p.best_node[scored[s]] = best_node[s];
  }
  for (double& v : p.probabilities) v /= total;
  std::size_t best = scored.front();
  double best_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < scored.size(); ++s) {
    if (logits[s] > best_logit || (logits[s] == best_logit && scored[s] < best)) {
      best_logit = logits[s];
      best = scored[s];
    }
  }
  p.predicted = best;
  return p;
}

Prediction predict(const ModelParams& params, const PreparedSample& sample) {
  Tape tape;
  const ForwardResult r = forward(tape, params, sample, false, 0);
  std::vector<double> logits;
  if (r.logits.valid()) logits.assign(r.logits.value().values().begin(), r.logits.value().values().end());
  return prediction_from_logits(sample.candidates, r.scored, logits, r.best_node);
}

Var nll_loss(const ForwardResult& result, std::size_t gold, bool* floor_used) {
  const auto it = std::find(result.scored.begin(), result.scored.end(), gold);
  if (floor_used) *floor_used = it == result.scored.end();
  if (it != result.scored.end()) {
    return cross_entropy(result.logits, static_cast<std::size_t>(it - result.scored.begin()));
  }
  if (!result.logits.valid() || result.scored.empty()) return Var{};
  Tape& t = result.logits.tape();
  const Var extended = concat_rows({result.logits, t.constant(Tensor(1, 1, kMissingGoldLogit))});
  return cross_entropy(extended, result.scored.size());
}

}  // namespace egcn
