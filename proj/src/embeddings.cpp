#include "egcn/embeddings.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "egcn/nn.hpp"

namespace egcn {

namespace {

constexpr char kMagic[8] = {'E', 'G', 'C', 'N', 'E', 'M', 'B', '1'};

static_assert(std::endian::native == std::endian::little, "embedding files assume a little-endian host");

void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 4)) throw DataError("embedding file truncated");
  return v;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::contextual: return "contextual";
    case Provenance::static_vectors: return "static";
    case Provenance::hash: return "hash";
  }
  return "?";
}

void EmbeddingStore::put_sequence(std::string key, Tensor vectors) {
  if (vectors.cols() != dim_ && vectors.rows() != 0) {
    throw ShapeError("embedding '" + key + "' has dim " + std::to_string(vectors.cols()) + ", store dim " +
                     std::to_string(dim_));
  }
  sequences_.insert_or_assign(std::move(key), std::move(vectors));
}

const Tensor* EmbeddingStore::sequence(const std::string& key) const {
  auto it = sequences_.find(key);
  return it == sequences_.end() ? nullptr : &it->second;
}

void EmbeddingStore::put_token(std::string token, std::vector<double> vector) {
  if (vector.size() != dim_) throw ShapeError("static vector for '" + token + "' has the wrong dimension");
  vocabulary_.insert_or_assign(std::move(token), std::move(vector));
}

Tensor EmbeddingStore::lookup_static(const Tokens& tokens) const {
  Tensor out(tokens.size(), dim_);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    auto it = vocabulary_.find(tokens[t]);
    if (it == vocabulary_.end()) it = vocabulary_.find(lowercase(tokens[t]));
    if (it == vocabulary_.end()) continue;
    std::copy(it->second.begin(), it->second.end(), out.row_span(t).begin());
  }
  return out;
}

Tensor EmbeddingStore::lookup_sequence(const std::string& key, std::size_t expected, std::string_view what) const {
  const Tensor* seq = sequence(key);
  if (!seq) throw CoverageError("no embeddings for " + std::string(what) + " (key '" + key + "')");
  if (seq->rows() < expected) {
    throw CoverageError("missing token vector for " + std::string(what) + " at index " + std::to_string(seq->rows()) +
                        " (key '" + key + "')");
  }
  if (seq->rows() > expected) {
    throw CoverageError("token count mismatch for " + std::string(what) + ": store has " +
                        std::to_string(seq->rows()) + ", text has " + std::to_string(expected));
  }
  return *seq;
}

Tensor EmbeddingStore::document(const Sample& s, std::size_t doc) const {
  if (doc >= s.documents.size()) throw CoverageError("document index out of range");
  if (provenance_ == Provenance::static_vectors) return lookup_static(s.documents[doc]);
  return lookup_sequence(document_key(s, doc), s.documents[doc].size(),
                         "sample " + s.id + " document " + std::to_string(doc));
}

Tensor EmbeddingStore::query(const Sample& s) const {
  const Tokens tokens = tokenize(s.query.raw);
  if (provenance_ == Provenance::static_vectors) return lookup_static(tokens);
  return lookup_sequence(query_key(s), tokens.size(), "sample " + s.id + " query");
}

void EmbeddingStore::merge(EmbeddingStore&& other) {
  if (other.dim_ != dim_ || other.provenance_ != provenance_) {
    throw DataError("cannot merge embedding stores with different dim or provenance");
  }
  for (auto& [k, v] : other.sequences_) sequences_.insert_or_assign(k, std::move(v));
  for (auto& [k, v] : other.vocabulary_) vocabulary_.insert_or_assign(k, std::move(v));
  other.sequences_.clear();
  other.vocabulary_.clear();
}

void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(kMagic, sizeof kMagic);
    write_u32(out, static_cast<std::uint32_t>(store.dim()));
    write_u32(out, static_cast<std::uint32_t>(store.sequences().size()));
    std::vector<float> row(store.dim());
    for (const auto& [key, vectors] : store.sequences()) {
      write_u32(out, static_cast<std::uint32_t>(key.size()));
      out.write(key.data(), static_cast<std::streamsize>(key.size()));
      write_u32(out, static_cast<std::uint32_t>(vectors.rows()));
      for (std::size_t r = 0; r < vectors.rows(); ++r) {
        for (std::size_t c = 0; c < vectors.cols(); ++c) row[c] = static_cast<float>(vectors(r, c));
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
      }
    }
    if (!out) throw DataError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

EmbeddingStore load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embedding file " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw DataError("embedding file " + path.string() + " has a bad magic header");
  }
  const std::uint32_t dim = read_u32(in);
  if (dim == 0) throw DataError("embedding file declares dimension 0");
  const std::uint32_t count = read_u32(in);
  EmbeddingStore store(dim, Provenance::contextual);
  std::vector<float> row(dim);
  for (std::uint32_t e = 0; e < count; ++e) {
    const std::uint32_t key_len = read_u32(in);
    std::string key(key_len, '\0');
    if (!in.read(key.data(), key_len)) throw DataError("embedding file truncated in key");
    const std::uint32_t tokens = read_u32(in);
    Tensor vectors(tokens, dim);
    for (std::uint32_t t = 0; t < tokens; ++t) {
      if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(dim * sizeof(float)))) {
        throw DataError("embedding file truncated in entry '" + key + "'");
      }
      for (std::uint32_t c = 0; c < dim; ++c) vectors(t, c) = static_cast<double>(row[c]);
    }
    if (!vectors.all_finite()) throw DataError("embedding entry '" + key + "' contains non-finite values");
    store.put_sequence(std::move(key), std::move(vectors));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("embedding file has trailing bytes");
  return store;
}

EmbeddingStore parse_static_vectors(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  EmbeddingStore store;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string token;
    if (!(ls >> token)) continue;
    std::vector<double> v;
    double x;
    while (ls >> x) v.push_back(x);
    if (!ls.eof()) throw DataError("static vectors: non-numeric value on line " + std::to_string(line_no));
    if (first) {
      if (v.empty()) throw DataError("static vectors: first line has no values");
      store = EmbeddingStore(v.size(), Provenance::static_vectors);
      first = false;
    }
    if (v.size() != store.dim()) throw DataError("static vectors: inconsistent dimension on line " + std::to_string(line_no));
    store.put_token(std::move(token), std::move(v));
  }
  if (first) throw DataError("static vectors: file is empty");
  return store;
}

EmbeddingStore load_static_vectors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open static vector file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_static_vectors(buf.str());
}

std::vector<double> hash_vector(std::string_view token, std::size_t dim, std::uint64_t seed) {
  std::uint64_t state = mix_seed(fnv1a(token), seed);
  auto next_uniform = [&state] {
    state = mix_seed(state, 0x51ED270B27A1ULL);
    return (static_cast<double>(state >> 11) + 0.5) * 0x1.0p-53;  // (0, 1)
  };
  std::vector<double> v(dim);
  for (std::size_t i = 0; i < dim; i += 2) {
    const double r = std::sqrt(-2.0 * std::log(next_uniform()));
    const double theta = 2.0 * std::numbers::pi * next_uniform();
    v[i] = r * std::cos(theta);
    if (i + 1 < dim) v[i + 1] = r * std::sin(theta);
  }
  const double norm = l2_norm(v);
  for (double& x : v) x /= norm;
  return v;
}

namespace {

Tensor hash_rows(const Tokens& tokens, std::size_t dim, std::uint64_t seed) {
  Tensor out(tokens.size(), dim);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const std::vector<double> v = hash_vector(tokens[t], dim, seed);
    std::copy(v.begin(), v.end(), out.row_span(t).begin());
  }
  return out;
}

}  // namespace

EmbeddingStore hash_embed(const Sample& sample, std::size_t dim, std::uint64_t seed) {
  EmbeddingStore store(dim, Provenance::hash);
  for (std::size_t d = 0; d < sample.documents.size(); ++d) {
    store.put_sequence(EmbeddingStore::document_key(sample, d), hash_rows(sample.documents[d], dim, seed));
  }
  store.put_sequence(EmbeddingStore::query_key(sample), hash_rows(tokenize(sample.query.raw), dim, seed));
  return store;
}

EmbeddingStore hash_embed(const std::vector<Sample>& samples, std::size_t dim, std::uint64_t seed) {
  EmbeddingStore store(dim, Provenance::hash);
  for (const Sample& s : samples) store.merge(hash_embed(s, dim, seed));
  return store;
}

EmbeddingStore hash_static_vectors(const std::vector<Sample>& samples, std::size_t dim, std::uint64_t seed) {
  std::set<std::string> vocab;
  for (const Sample& s : samples) {
    for (const Tokens& d : s.documents) {
      for (const std::string& t : d) vocab.insert(lowercase(t));
    }
    for (const std::string& t : tokenize(s.query.raw)) vocab.insert(lowercase(t));
  }
  EmbeddingStore store(dim, Provenance::static_vectors);
  for (const std::string& t : vocab) {
    if (t.rfind("mask_", 0) == 0) continue;  // placeholders have no pretrained vector
    store.put_token(t, hash_vector(t, dim, seed));
  }
  return store;
}

}  // namespace egcn
