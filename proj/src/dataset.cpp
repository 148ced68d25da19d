#include "egcn/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include "egcn/nn.hpp"
#include "json.hpp"

namespace egcn {

using nlohmann::json;

namespace {

bool is_ascii_punct(unsigned char c) {
  return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) || (c >= 123 && c <= 126);
}

// Length in bytes of a Unicode whitespace character starting at `i`, or 0.
std::size_t whitespace_length(std::string_view s, std::size_t i) {
  const auto c = static_cast<unsigned char>(s[i]);
  if (c == ' ' || (c >= 0x09 && c <= 0x0D)) return 1;
  if (c < 0x80) return 0;
  auto byte = [&](std::size_t k) -> unsigned char {
    return i + k < s.size() ? static_cast<unsigned char>(s[i + k]) : 0;
  };
  if (c == 0xC2 && (byte(1) == 0x85 || byte(1) == 0xA0)) return 2;
  if (c == 0xE1 && byte(1) == 0x9A && byte(2) == 0x80) return 3;  // U+1680
  if (c == 0xE2 && byte(1) == 0x80) {
    const unsigned char b2 = byte(2);
    if ((b2 >= 0x80 && b2 <= 0x8A) || b2 == 0xA8 || b2 == 0xA9 || b2 == 0xAF) return 3;  // U+2000..200A, 2028, 2029, 202F
  }
  if (c == 0xE2 && byte(1) == 0x81 && byte(2) == 0x9F) return 3;  // U+205F
  if (c == 0xE3 && byte(1) == 0x80 && byte(2) == 0x80) return 3;  // U+3000
  return 0;
}

void split_chunk(std::string_view chunk, Tokens& out) {
  std::size_t begin = 0;
  std::size_t end = chunk.size();
  while (begin < end && is_ascii_punct(static_cast<unsigned char>(chunk[begin]))) {
    out.emplace_back(1, chunk[begin]);
    ++begin;
  }
  Tokens trailing;
  while (end > begin && is_ascii_punct(static_cast<unsigned char>(chunk[end - 1]))) {
    trailing.emplace_back(1, chunk[end - 1]);
    --end;
  }
  if (end > begin) out.emplace_back(chunk.substr(begin, end - begin));
  out.insert(out.end(), trailing.rbegin(), trailing.rend());
}

std::string join(const Tokens& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::size_t i = 0;
  std::size_t start = 0;
  while (i < text.size()) {
    if (const std::size_t w = whitespace_length(text, i)) {
      if (i > start) split_chunk(text.substr(start, i - start), out);
      i += w;
      start = i;
    } else {
      ++i;
    }
  }
  if (start < text.size()) split_chunk(text.substr(start), out);
  return out;
}

std::string normalize_token(std::string_view token) {
  std::string out;
  out.reserve(token.size());
  for (char ch : token) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_ascii_punct(c)) continue;
    out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch;
  }
  return out;
}

std::string normalize_tokens(const Tokens& tokens, std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    std::string t = normalize_token(tokens[i]);
    if (t.empty()) continue;
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::string normalize_text(std::string_view text) {
  const Tokens t = tokenize(text);
  return normalize_tokens(t, 0, t.size());
}

Query Query::parse(std::string_view raw) {
  Query q;
  q.raw = std::string(raw);
  const auto space = raw.find(' ');
  if (space == std::string_view::npos) {
    q.relation = std::string(raw);
  } else {
    q.relation = std::string(raw.substr(0, space));
    q.subject = std::string(raw.substr(space + 1));
  }
  return q;
}

std::optional<std::size_t> Sample::answer_index() const {
  if (!answer) return std::nullopt;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i] == *answer) return i;
  }
  return std::nullopt;
}

std::optional<std::string> validate(const Sample& s) {
  if (s.query.relation.empty()) return "query relation is empty";
  if (s.query.subject.empty()) return "query has no subject";
  if (s.documents.empty()) return "no support documents";
  if (s.candidates.empty()) return "empty candidate list";
  if (s.candidates.size() < 2) return "fewer than two candidates";
  std::set<std::string> seen;
  for (const std::string& c : s.candidates) {
    const std::string key = normalize_text(c);
    if (key.empty()) return "candidate '" + c + "' is empty after normalization";
    if (!seen.insert(key).second) return "duplicate candidate after normalization: '" + c + "'";
  }
  if (s.answer && !s.answer_index()) return "answer '" + *s.answer + "' is not among the candidates";
  return std::nullopt;
}

ParseResult parse_dataset_text(std::string_view json_text, const Tokenizer& tokenizer) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("dataset is not valid JSON: ") + e.what());
  }
  if (!root.is_array()) throw DataError("dataset must be a JSON array of samples");

  ParseResult result;
  for (std::size_t pos = 0; pos < root.size(); ++pos) {
    const json& obj = root[pos];
    Rejection rej{pos, "", ""};
    if (!obj.is_object()) {
      rej.reason = "entry is not an object";
      result.rejections.push_back(rej);
      continue;
    }
    if (obj.contains("id") && obj["id"].is_string()) rej.id = obj["id"].get<std::string>();
    auto fail = [&](std::string reason) {
      rej.reason = std::move(reason);
      result.rejections.push_back(rej);
    };
    if (!obj.contains("id") || !obj["id"].is_string()) { fail("missing field 'id'"); continue; }
    if (!obj.contains("query") || !obj["query"].is_string()) { fail("missing field 'query'"); continue; }
    if (!obj.contains("supports") || !obj["supports"].is_array()) { fail("missing field 'supports'"); continue; }
    if (!obj.contains("candidates") || !obj["candidates"].is_array()) { fail("missing field 'candidates'"); continue; }
    if (obj.contains("answer") && !obj["answer"].is_string() && !obj["answer"].is_null()) {
      fail("field 'answer' is not a string");
      continue;
    }

    Sample s;
    s.id = rej.id;
    s.query = Query::parse(obj["query"].get<std::string>());
    bool ok = true;
    for (const json& doc : obj["supports"]) {
      if (!doc.is_string()) { ok = false; break; }
      s.documents.push_back(tokenizer(doc.get<std::string>()));
    }
    if (!ok) { fail("support document is not a string"); continue; }
    for (const json& c : obj["candidates"]) {
      if (!c.is_string()) { ok = false; break; }
      s.candidates.push_back(c.get<std::string>());
    }
    if (!ok) { fail("candidate is not a string"); continue; }
    if (obj.contains("answer") && obj["answer"].is_string()) s.answer = obj["answer"].get<std::string>();

    if (auto why = validate(s)) { fail(*why); continue; }
    result.samples.push_back(std::move(s));
  }
  return result;
}

ParseResult parse_dataset(const std::filesystem::path& path, const Tokenizer& tokenizer) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_dataset_text(buf.str(), tokenizer);
}

std::string serialize_dataset(const std::vector<Sample>& samples) {
  json root = json::array();
  for (const Sample& s : samples) {
    json obj;
    obj["id"] = s.id;
    obj["query"] = s.query.raw;
    json supports = json::array();
    for (const Tokens& d : s.documents) supports.push_back(join(d));
    obj["supports"] = supports;
    obj["candidates"] = s.candidates;
    if (s.answer) obj["answer"] = *s.answer;
    root.push_back(std::move(obj));
  }
  return root.dump(1);
}

void write_dataset(const std::vector<Sample>& samples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << serialize_dataset(samples) << '\n';
}

// ---- masking ------------------------------------------------------------

Sample mask_sample(const Sample& sample, std::uint64_t seed, MaskTable* table) {
  std::vector<std::string> entities;
  for (const std::string& c : sample.candidates) {
    if (std::find(entities.begin(), entities.end(), c) == entities.end()) entities.push_back(c);
  }
  if (!sample.query.subject.empty() &&
      std::find(entities.begin(), entities.end(), sample.query.subject) == entities.end()) {
    entities.push_back(sample.query.subject);
  }

  std::unordered_set<std::string> vocabulary;
  for (const Tokens& d : sample.documents) vocabulary.insert(d.begin(), d.end());
  for (const std::string& c : sample.candidates) vocabulary.insert(c);
  for (const std::string& t : tokenize(sample.query.raw)) vocabulary.insert(t);

  std::vector<std::size_t> indices;
  for (std::size_t k = 1; indices.size() < entities.size(); ++k) {
    if (!vocabulary.contains("MASK_" + std::to_string(k))) indices.push_back(k);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(indices.begin(), indices.end(), rng);

  std::map<std::string, std::string> placeholder;  // original → MASK_k
  MaskTable local;
  for (std::size_t e = 0; e < entities.size(); ++e) {
    const std::string p = "MASK_" + std::to_string(indices[e]);
    placeholder[entities[e]] = p;
    local[p] = entities[e];
  }

  std::vector<Tokens> entity_tokens;
  for (const std::string& e : entities) entity_tokens.push_back(tokenize(e));
  std::vector<std::size_t> order(entities.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return entity_tokens[a].size() > entity_tokens[b].size();
  });

  Sample out = sample;
  for (Tokens& doc : out.documents) {
    const std::size_t n = doc.size();
    std::vector<bool> taken(n, false);
    std::vector<std::optional<std::size_t>> starts(n);  // entity replacing the span starting here
    for (std::size_t e : order) {
      const Tokens& pat = entity_tokens[e];
      if (pat.empty() || pat.size() > n) continue;
      for (std::size_t i = 0; i + pat.size() <= n; ++i) {
        bool match = true;
        for (std::size_t k = 0; k < pat.size() && match; ++k) match = !taken[i + k] && doc[i + k] == pat[k];
        if (!match) continue;
        for (std::size_t k = 0; k < pat.size(); ++k) taken[i + k] = true;
        starts[i] = e;
        i += pat.size() - 1;
      }
    }
    Tokens rebuilt;
    for (std::size_t i = 0; i < n;) {
      if (starts[i]) {
        rebuilt.push_back(placeholder.at(entities[*starts[i]]));
        i += entity_tokens[*starts[i]].size();
      } else {
        rebuilt.push_back(doc[i]);
        ++i;
      }
    }
    doc = std::move(rebuilt);
  }
  for (std::string& c : out.candidates) c = placeholder.at(c);
  if (out.answer) out.answer = placeholder.at(*out.answer);
  if (!sample.query.subject.empty()) {
    out.query.subject = placeholder.at(sample.query.subject);
    out.query.raw = out.query.relation + " " + out.query.subject;
  }
  if (table) *table = std::move(local);
  return out;
}

MaskedDataset mask_dataset(const std::vector<Sample>& samples, std::uint64_t seed) {
  MaskedDataset out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    MaskTable table;
    out.samples.push_back(mask_sample(samples[i], mix_seed(seed, i), &table));
    out.tables[samples[i].id] = std::move(table);
  }
  return out;
}

Sample unmask_sample(const Sample& masked, const MaskTable& table) {
  auto restore = [&](const std::string& s) {
    auto it = table.find(s);
    return it == table.end() ? s : it->second;
  };
  Sample out = masked;
  for (Tokens& doc : out.documents) {
    Tokens rebuilt;
    for (const std::string& t : doc) {
      if (auto it = table.find(t); it != table.end()) {
        const Tokens orig = tokenize(it->second);
        rebuilt.insert(rebuilt.end(), orig.begin(), orig.end());
      } else {
        rebuilt.push_back(t);
      }
    }
    doc = std::move(rebuilt);
  }
  for (std::string& c : out.candidates) c = restore(c);
  if (out.answer) out.answer = restore(*out.answer);
  if (!out.query.subject.empty()) {
    out.query.subject = restore(out.query.subject);
    out.query.raw = out.query.relation + " " + out.query.subject;
  }
  return out;
}

std::string serialize_mask_tables(const std::map<std::string, MaskTable>& tables) {
  json root = json::object();
  for (const auto& [id, table] : tables) root[id] = table;
  return root.dump(1);
}

// ---- statistics -----------------------------------------------------------

FieldStats field_stats(std::vector<double> values) {
  if (values.empty()) throw DataError("statistics requested over an empty field");
  std::sort(values.begin(), values.end());
  FieldStats f;
  f.count = values.size();
  f.min = values.front();
  f.max = values.back();
  f.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  const std::size_t mid = values.size() / 2;
  f.median = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  return f;
}

DatasetStats dataset_stats(const std::vector<Sample>& samples) {
  if (samples.empty()) throw DataError("dataset statistics need at least one sample");
  std::vector<double> cands, docs, tokens;
  for (const Sample& s : samples) {
    cands.push_back(static_cast<double>(s.candidates.size()));
    docs.push_back(static_cast<double>(s.documents.size()));
    for (const Tokens& d : s.documents) tokens.push_back(static_cast<double>(d.size()));
  }
  DatasetStats st;
  st.sample_count = samples.size();
  st.candidates = field_stats(std::move(cands));
  st.documents = field_stats(std::move(docs));
  st.tokens_per_document = field_stats(std::move(tokens));
  return st;
}

std::string stats_csv(const DatasetStats& st) {
  std::string out = "field,min,max,mean,median\n";
  auto row = [&](const char* name, const FieldStats& f) {
    out += std::string(name) + "," + format_number(f.min) + "," + format_number(f.max) + "," +
           format_number(f.mean) + "," + format_number(f.median) + "\n";
  };
  row("candidates", st.candidates);
  row("documents", st.documents);
  row("tokens_per_document", st.tokens_per_document);
  return out;
}

double SplitReport::overlap_fraction() const {
  const std::size_t smaller = std::min(train_size, dev_size);
  return smaller == 0 ? 0.0 : static_cast<double>(overlapping_ids.size()) / static_cast<double>(smaller);
}

SplitReport split_check(const std::vector<Sample>& train, const std::vector<Sample>& dev) {
  SplitReport r;
  r.train_size = train.size();
  r.dev_size = dev.size();
  std::unordered_set<std::string> ids;
  for (const Sample& s : train) ids.insert(s.id);
  std::set<std::string> overlap;
  for (const Sample& s : dev) {
    if (ids.contains(s.id)) overlap.insert(s.id);
  }
  r.overlapping_ids.assign(overlap.begin(), overlap.end());
  return r;
}

}  // namespace egcn
