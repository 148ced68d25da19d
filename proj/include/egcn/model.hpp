#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "egcn/embeddings.hpp"
#include "egcn/encoder.hpp"
#include "egcn/graph.hpp"
#include "egcn/rgcn.hpp"

namespace egcn {

enum class ScoreHead : std::uint8_t { affine, mlp };
std::string_view score_head_name(ScoreHead h);
std::optional<ScoreHead> parse_score_head(std::string_view name);

/// Logit given to the gold candidate when none of its mentions made it into the graph.
inline constexpr double kMissingGoldLogit = -30.0;

struct ModelConfig {
  EncoderDims dims;
  std::size_t layers = 3;
  EdgeMode edge_mode = EdgeMode::typed;
  ScoreHead score_head = ScoreHead::mlp;
  std::vector<std::size_t> head_hidden = {256, 128};
  double dropout = 0.0;  // on x̂ and on the scoring input
  SpanPooling pooling = SpanPooling::mean;
  GraphOptions graph;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

std::string config_to_json(const ModelConfig& config);
/// Throws DataError on malformed or inconsistent input.
ModelConfig config_from_json(std::string_view text);

struct ModelParams {
  ModelConfig config;
  EncoderParams encoder;
  RgcnParams rgcn;
  std::vector<AffineBlock> head;  // [q, h_i] → … → 1
  std::optional<InducedEdgeParams> edges;
  std::uint64_t seed = 0;
  std::string rng_state;  // training-order generator state at snapshot time

  ModelParams() = default;
  explicit ModelParams(const ModelConfig& config);

  /// Xavier init from a seed derived from `master_seed`.
  void init(std::uint64_t master_seed);
  /// Every trainable block in declaration order. Rebuild after moving the object.
  ParameterList parameters();
  std::vector<const Parameter*> parameters() const;
};

/// Rounds every parameter to single precision, the checkpoint storage width.
void round_to_float(ModelParams& params);

/// Per-sample inputs that do not depend on parameters.
struct PreparedSample {
  std::string id;
  std::string relation;
  std::vector<std::string> candidates;
  std::optional<std::size_t> gold;
  EntityGraph graph;
  PropagationPlan plan;
  Tensor query;   // T × raw token vectors
  Tensor pooled;  // n × raw pooled mention vectors
};

/// Builds the graph (an empty graph when no mention is found) and gathers vectors.
PreparedSample prepare_sample(const Sample& sample, const EmbeddingStore& store, const ModelConfig& config,
                              const CorefChains* chains = nullptr);

struct ForwardResult {
  Var node_scores;                   // n × 1, empty when n = 0
  Var logits;                        // k × 1 over candidates with mentions
  std::vector<std::size_t> scored;   // candidate index of each logit row
  std::vector<std::size_t> best_node;
};

/// Full differentiable pass. Dropout masks derive from `dropout_seed` when training.
ForwardResult forward(Tape& tape, const ModelParams& params, const PreparedSample& sample, bool training = false,
                      std::uint64_t dropout_seed = 0);

struct Prediction {
  std::vector<std::string> candidates;
  std::vector<double> probabilities;             // 0 for mention-less candidates
  std::vector<std::optional<std::size_t>> best_node;
  std::size_t predicted = 0;
  bool answerable = true;
};

/// Softmax over the scored candidates; lowest index wins ties. With nothing
/// scored the probabilities are uniform and candidate 0 is predicted.
Prediction prediction_from_logits(std::vector<std::string> candidates, const std::vector<std::size_t>& scored,
                                  const std::vector<double>& logits, const std::vector<std::size_t>& best_node = {});

Prediction predict(const ModelParams& params, const PreparedSample& sample);

/// −log p(gold). `floor_used` reports a gold candidate without mentions, which
/// enters the softmax with kMissingGoldLogit. Invalid Var when nothing was scored.
Var nll_loss(const ForwardResult& result, std::size_t gold, bool* floor_used = nullptr);

}  // namespace egcn
