#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "egcn/dataset.hpp"

namespace egcn {

/// Two-hop retrieval task. Each sample has six documents and eight candidates:
///   A: "<subject> r1 <bridge>"   B: "<bridge> r2 <answer>"
/// plus two distractor chains "<p> r1 <m>", "<m> r2 <e>" built the same way.
/// Every entity is "<name> <kind>". In an `informative_fraction` of samples the
/// middle entities share one kind that pairs with the answer's kind, so a model
/// that only sees global context can still answer; otherwise all end entities
/// share a kind and only the document structure identifies the answer.
struct SyntheticOptions {
  double informative_fraction = 0.15;
  std::size_t max_filler = 3;  // filler words around each statement
  std::string id_prefix = "synth";
};

std::vector<Sample> generate_two_hop(std::size_t count, std::uint64_t seed, const SyntheticOptions& options = {});

}  // namespace egcn
