#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "egcn/embeddings.hpp"
#include "egcn/graph.hpp"
#include "egcn/model.hpp"
#include "egcn/train.hpp"

namespace egcn {

enum class Variant : std::uint8_t {
  full_ensemble,
  full,
  static_rgcn,
  static_no_rgcn,
  no_rgcn,
  no_relation_types,
  no_doc_based,
  no_match,
  no_coref,
  no_complement,
  induced_edges,
};

struct VariantInfo {
  Variant variant;
  std::string_view name;   // command-line spelling
  std::string_view label;  // report row label
};

/// Every variant, in report order.
const std::vector<VariantInfo>& variant_catalogue();
std::string_view variant_name(Variant v);
std::string_view variant_label(Variant v);
std::optional<Variant> parse_variant(std::string_view name);

bool uses_static_vectors(Variant v);
/// The model configuration a variant trains, derived from the full configuration.
/// `static_dim` replaces the input size for the static-vector variants.
ModelConfig variant_config(const ModelConfig& full, Variant v, std::size_t static_dim = 0);

struct AblationData {
  std::vector<Sample> train;
  std::vector<Sample> dev;
  const EmbeddingStore* embeddings = nullptr;
  const EmbeddingStore* static_vectors = nullptr;  // optional
  const std::map<std::string, CorefChains>* chains = nullptr;
};

struct AblationSettings {
  ModelConfig model;  // the full model
  TrainConfig training;
  std::vector<std::uint64_t> seeds;
  std::vector<Variant> variants;
};

struct AblationRow {
  Variant variant = Variant::full;
  std::size_t runs = 0;
  std::vector<double> accuracies;
  double mean = 0;
  double std = 0;  // sample standard deviation, 0 for a single run
  std::string note;
  bool skipped = false;
};

/// Trains and evaluates every requested variant once per seed; the ensemble row
/// combines the full-model runs. Rows come back in catalogue order.
std::vector<AblationRow> run_ablation(const AblationData& data, const AblationSettings& settings);

/// Header `variant,label,runs,mean_accuracy,std_accuracy,run_accuracies,note`;
/// run accuracies are `;`-separated in seed order.
std::string ablation_csv(const std::vector<AblationRow>& rows);

/// Flat `key = value` lines; `#` starts a comment. Throws DataError on a malformed line.
std::map<std::string, std::string> parse_key_values(std::string_view text);

}  // namespace egcn
