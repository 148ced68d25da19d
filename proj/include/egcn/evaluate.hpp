#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "egcn/model.hpp"

namespace egcn {

/// Eval-mode predictions, in sample order. threads = 0 uses default_thread_count().
std::vector<Prediction> predict_all(const ModelParams& params, const std::vector<PreparedSample>& samples,
                                    std::size_t threads = 0);

/// 1-based rank of the gold candidate by descending probability; ties go to the lower index.
std::size_t gold_rank(const std::vector<double>& probabilities, std::size_t gold);

struct SampleOutcome {
  std::string id;
  std::string relation;
  std::size_t candidate_count = 0;
  std::size_t node_count = 0;
  std::size_t gold_rank = 0;
  std::size_t predicted = 0;
  bool correct = false;
  bool answerable = true;
};

/// Samples without a gold answer are skipped.
std::vector<SampleOutcome> score_outcomes(const std::vector<Prediction>& predictions,
                                          const std::vector<PreparedSample>& samples);
double accuracy(const std::vector<SampleOutcome>& outcomes);

struct RelationRow {
  std::string relation;
  std::size_t support = 0;
  double accuracy = 0;
  double p_at_2 = 0;
  double p_at_5 = 0;
  double mean_candidates = 0;
  double std_candidates = 0;
};

struct Bucket {
  double size = 0;  // candidate count, or mean node count of a decile
  std::size_t count = 0;
  double accuracy = 0;
};

struct Correlation {
  std::vector<Bucket> buckets;
  /// Over buckets with at least `min_bucket` samples; empty when undefined.
  std::optional<double> pearson;
};

struct EvalReport {
  std::size_t samples = 0;
  std::size_t unanswerable = 0;
  double accuracy = 0;
  double p_at_2 = 0;
  double p_at_5 = 0;
  std::vector<RelationRow> relations;  // sorted by relation name
  Correlation by_candidates;
  Correlation by_nodes;
};

/// Undefined for fewer than two points or zero variance in either coordinate.
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);
Correlation correlate(std::vector<Bucket> buckets, std::size_t min_bucket = 10);
std::vector<Bucket> candidate_buckets(const std::vector<SampleOutcome>& outcomes);
std::vector<Bucket> node_decile_buckets(const std::vector<SampleOutcome>& outcomes);

EvalReport make_report(const std::vector<SampleOutcome>& outcomes);

struct Headline {
  std::vector<RelationRow> best;
  std::vector<RelationRow> worst;
};
/// Relations with enough support and candidates, three best and three worst by accuracy.
Headline headline_relations(const EvalReport& report, std::size_t min_support = 50, double min_candidates = 5.0,
                            std::size_t count = 3);

std::string relations_csv(const EvalReport& report);
std::string buckets_csv(const EvalReport& report);
std::string report_json(const EvalReport& report);
std::string predictions_csv(const std::vector<Prediction>& predictions, const std::vector<PreparedSample>& samples);

/// Product of member probabilities, computed as a sum of logs; argmax ties go to
/// the lower index. Throws std::invalid_argument if members disagree on candidates.
Prediction ensemble_combine(const std::vector<Prediction>& members);

}  // namespace egcn
