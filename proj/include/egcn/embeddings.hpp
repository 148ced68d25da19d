#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "egcn/dataset.hpp"
#include "egcn/tensor.hpp"

namespace egcn {

enum class Provenance : std::uint8_t { contextual, static_vectors, hash };
std::string_view provenance_name(Provenance p);

/// A sample's tokens are not fully covered by the store.
class CoverageError : public DataError {
 public:
  using DataError::DataError;
};

/// Precomputed token vectors. Contextual and hash stores hold one matrix per
/// (sample, document) and per (sample, query); static stores hold one vector
/// per token type and map unknown tokens to zero.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  EmbeddingStore(std::size_t dim, Provenance provenance) : dim_(dim), provenance_(provenance) {}

  std::size_t dim() const noexcept { return dim_; }
  Provenance provenance() const noexcept { return provenance_; }

  static std::string document_key(const Sample& s, std::size_t doc) { return s.id + "/" + std::to_string(doc); }
  static std::string query_key(const Sample& s) { return s.id + "/query"; }

  void put_sequence(std::string key, Tensor vectors);
  const Tensor* sequence(const std::string& key) const;
  const std::map<std::string, Tensor>& sequences() const noexcept { return sequences_; }

  void put_token(std::string token, std::vector<double> vector);
  std::size_t vocabulary_size() const noexcept { return vocabulary_.size(); }

  /// token_count × dim vectors for a document; throws CoverageError naming the gap.
  Tensor document(const Sample& s, std::size_t doc) const;
  Tensor query(const Sample& s) const;

  /// Moves all entries of `other` into this store (dims and provenance must agree).
  void merge(EmbeddingStore&& other);

 private:
  Tensor lookup_static(const Tokens& tokens) const;
  Tensor lookup_sequence(const std::string& key, std::size_t expected, std::string_view what) const;

  std::size_t dim_ = 0;
  Provenance provenance_ = Provenance::contextual;
  std::map<std::string, Tensor> sequences_;
  std::unordered_map<std::string, std::vector<double>> vocabulary_;
};

/// Binary layout, little-endian: "EGCNEMB1", u32 dim, u32 entry count, then per
/// entry u32 key length, key bytes, u32 token count, token_count×dim f32.
void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path);
EmbeddingStore load_embeddings(const std::filesystem::path& path);

/// Whitespace-separated "token v1 ... vD" lines.
EmbeddingStore load_static_vectors(const std::filesystem::path& path);
EmbeddingStore parse_static_vectors(std::string_view text);

/// Unit-norm pseudo-random vector that depends only on (token, seed).
std::vector<double> hash_vector(std::string_view token, std::size_t dim, std::uint64_t seed);
EmbeddingStore hash_embed(const Sample& sample, std::size_t dim, std::uint64_t seed);
EmbeddingStore hash_embed(const std::vector<Sample>& samples, std::size_t dim, std::uint64_t seed);
/// Static store over the lowercased vocabulary of `samples`, hash-generated.
EmbeddingStore hash_static_vectors(const std::vector<Sample>& samples, std::size_t dim, std::uint64_t seed);

}  // namespace egcn
