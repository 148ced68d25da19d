#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "egcn/dataset.hpp"

namespace egcn {

enum class RelationType : std::uint8_t { doc_based = 0, match = 1, coref = 2, complement = 3 };
inline constexpr std::size_t kRelationCount = 4;
inline constexpr std::array<RelationType, kRelationCount> kRelations = {
    RelationType::doc_based, RelationType::match, RelationType::coref, RelationType::complement};

std::string_view relation_name(RelationType r);
std::optional<RelationType> parse_relation(std::string_view name);

enum class MentionSource : std::uint8_t { exact, coref };

struct Mention {
  std::size_t doc = 0;
  std::size_t start = 0;  // token span [start, end)
  std::size_t end = 0;
  std::string entity;                    // candidate string or the query subject
  std::optional<std::size_t> candidate;  // index into the candidate list
  MentionSource source = MentionSource::exact;
  std::string surface;                   // normalized span text
  std::vector<std::size_t> chains;       // accepted coreference chains containing it

  friend bool operator==(const Mention&, const Mention&) = default;
};

struct TokenSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

/// Per document, a list of chains; each chain a list of token spans.
struct CorefChains {
  std::vector<std::vector<std::vector<TokenSpan>>> documents;
};

/// Sidecar layout: {"sample-id": [[[[s,e],...], ...chains], ...documents]}.
std::map<std::string, CorefChains> parse_coref_chains(std::string_view json_text);
std::map<std::string, CorefChains> load_coref_chains(const std::filesystem::path& path);

struct GraphOptions {
  /// Relations to build; a disabled relation is dropped before COMPLEMENT is derived.
  std::array<bool, kRelationCount> enabled = {true, true, true, true};
  /// Masked data: coreference chains are never consulted.
  bool masked = false;
  /// Above this many nodes COMPLEMENT is left implicit.
  std::size_t complement_threshold = 500;

  friend bool operator==(const GraphOptions&, const GraphOptions&) = default;
};

using NodePair = std::pair<std::uint32_t, std::uint32_t>;

struct EntityGraph {
  std::vector<Mention> nodes;
  /// Per relation, sorted unordered pairs (i < j).
  std::array<std::vector<NodePair>, kRelationCount> edges;
  std::array<bool, kRelationCount> enabled = {true, true, true, true};
  /// False when COMPLEMENT is enabled but implicit (large graphs).
  bool complement_materialized = true;
  /// M_c: node indices mentioning each candidate.
  std::vector<std::vector<std::size_t>> candidate_mentions;

  std::size_t node_count() const noexcept { return nodes.size(); }
  bool complement_implicit() const noexcept {
    return enabled[static_cast<std::size_t>(RelationType::complement)] && !complement_materialized;
  }
  /// COMPLEMENT pairs, materialized on demand when implicit.
  std::vector<NodePair> complement_pairs() const;
  /// Distinct neighbours of every node over the union of all enabled relations.
  std::vector<std::vector<std::size_t>> neighbours() const;

  friend bool operator==(const EntityGraph&, const EntityGraph&) = default;
};

/// Longest-first, non-overlapping spans whose normalized text equals a
/// normalized candidate or the query subject. Sorted by (doc, start).
std::vector<Mention> find_exact_mentions(const Sample& sample);

struct CorefMergeReport {
  std::size_t accepted = 0;
  std::size_t ambiguous = 0;
  std::size_t unmatched = 0;
  std::size_t rejected = 0;
  std::size_t added_mentions = 0;
};

/// A chain whose spans overlap exact mentions of exactly one entity adds its
/// remaining spans as COREF mentions of that entity; chains touching two or
/// more entities are discarded; chains touching none are ignored.
std::vector<Mention> merge_coref(const Sample& sample, std::vector<Mention> mentions, const CorefChains& chains,
                                 CorefMergeReport* report = nullptr);

/// Raised when a sample yields no mention nodes.
class EmptyGraphError : public DataError {
 public:
  using DataError::DataError;
};

EntityGraph build_edges(std::vector<Mention> mentions, std::size_t candidate_count, const GraphOptions& options = {});

/// find_exact_mentions → merge_coref (unless masked or no chains) → build_edges.
EntityGraph build_graph(const Sample& sample, const CorefChains* chains, const GraphOptions& options = {});

struct GraphReport {
  std::size_t node_count = 0;
  std::array<std::size_t, kRelationCount> edge_counts{};
  bool complete = false;   // union of all relations covers every pair
  bool connected = false;
};

GraphReport graph_report(const EntityGraph& graph);
std::string graph_report_csv_header();
std::string graph_report_csv_row(const std::string& id, const GraphReport& report);

std::string graph_to_json(const EntityGraph& graph, const std::string& id);
EntityGraph graph_from_json(std::string_view text, std::string* id = nullptr);

}  // namespace egcn
