#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace egcn {

/// Malformed or inconsistent input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Tokens = std::vector<std::string>;

/// Splits on Unicode whitespace, then peels leading and trailing ASCII
/// punctuation off each chunk as single-character tokens.
Tokens tokenize(std::string_view text);

using Tokenizer = std::function<Tokens(std::string_view)>;

/// ASCII-lowercased token with ASCII punctuation removed (may become empty).
std::string normalize_token(std::string_view token);
/// Normalized tokens joined by single spaces, empty tokens dropped.
std::string normalize_tokens(const Tokens& tokens, std::size_t begin, std::size_t end);
std::string normalize_text(std::string_view text);

struct Query {
  std::string relation;
  std::string subject;
  std::string raw;

  /// Splits at the first space: "place_of_birth erik penser" → {place_of_birth, erik penser}.
  static Query parse(std::string_view raw);
  friend bool operator==(const Query&, const Query&) = default;
};

struct Sample {
  std::string id;
  Query query;
  std::vector<Tokens> documents;
  std::vector<std::string> candidates;
  std::optional<std::string> answer;

  /// Index of the answer among the candidates, by normalized comparison.
  std::optional<std::size_t> answer_index() const;
  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Rejection {
  std::size_t position = 0;
  std::string id;
  std::string reason;
};

struct ParseResult {
  std::vector<Sample> samples;
  std::vector<Rejection> rejections;
};

/// Checks the Sample invariants; returns the reason for the first violation.
std::optional<std::string> validate(const Sample& sample);

ParseResult parse_dataset_text(std::string_view json_text, const Tokenizer& tokenizer = tokenize);
ParseResult parse_dataset(const std::filesystem::path& path, const Tokenizer& tokenizer = tokenize);

/// Serializes to the input JSON layout; supports are tokens joined by spaces.
std::string serialize_dataset(const std::vector<Sample>& samples);
void write_dataset(const std::vector<Sample>& samples, const std::filesystem::path& path);

// ---- masking ------------------------------------------------------------

/// Placeholder → original string, for one sample.
using MaskTable = std::map<std::string, std::string>;

struct MaskedDataset {
  std::vector<Sample> samples;
  std::map<std::string, MaskTable> tables;  // sample id → table
};

/// Replaces every candidate string and the query subject by a per-sample
/// placeholder MASK_k (k drawn from a seeded permutation), in documents,
/// candidates, answer and query.
MaskedDataset mask_dataset(const std::vector<Sample>& samples, std::uint64_t seed);
Sample mask_sample(const Sample& sample, std::uint64_t seed, MaskTable* table);
Sample unmask_sample(const Sample& masked, const MaskTable& table);
std::string serialize_mask_tables(const std::map<std::string, MaskTable>& tables);

// ---- statistics -----------------------------------------------------------

struct FieldStats {
  double min = 0;
  double max = 0;
  double mean = 0;
  double median = 0;
  std::size_t count = 0;
};

struct DatasetStats {
  std::size_t sample_count = 0;
  FieldStats candidates;
  FieldStats documents;
  FieldStats tokens_per_document;
};

FieldStats field_stats(std::vector<double> values);
DatasetStats dataset_stats(const std::vector<Sample>& samples);
/// CSV with header `field,min,max,mean,median`.
std::string stats_csv(const DatasetStats& stats);

struct SplitReport {
  std::size_t train_size = 0;
  std::size_t dev_size = 0;
  std::vector<std::string> overlapping_ids;
  bool disjoint() const { return overlapping_ids.empty(); }
  double overlap_fraction() const;
};

SplitReport split_check(const std::vector<Sample>& train, const std::vector<Sample>& dev);

}  // namespace egcn
