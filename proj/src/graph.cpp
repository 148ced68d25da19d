#include "egcn/graph.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace egcn {

using nlohmann::json;

namespace {

constexpr std::size_t idx(RelationType r) { return static_cast<std::size_t>(r); }

bool overlaps(std::size_t a0, std::size_t a1, std::size_t b0, std::size_t b1) { return a0 < b1 && b0 < a1; }

void sort_mentions(std::vector<Mention>& m) {
  std::stable_sort(m.begin(), m.end(), [](const Mention& a, const Mention& b) {
    if (a.doc != b.doc) return a.doc < b.doc;
    if (a.start != b.start) return a.start < b.start;
    return a.end < b.end;
  });
}

}  // namespace

std::string_view relation_name(RelationType r) {
  switch (r) {
    case RelationType::doc_based: return "DOC_BASED";
    case RelationType::match: return "MATCH";
    case RelationType::coref: return "COREF";
    case RelationType::complement: return "COMPLEMENT";
  }
  return "?";
}

std::optional<RelationType> parse_relation(std::string_view name) {
  for (RelationType r : kRelations) {
    if (relation_name(r) == name) return r;
  }
  return std::nullopt;
}

std::map<std::string, CorefChains> parse_coref_chains(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("coreference file is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw DataError("coreference file must map sample ids to chains");
  std::map<std::string, CorefChains> out;
  for (const auto& [id, docs] : root.items()) {
    if (!docs.is_array()) throw DataError("coreference entry '" + id + "' is not an array of documents");
    CorefChains cc;
    for (const json& doc : docs) {
      if (!doc.is_array()) throw DataError("coreference entry '" + id + "': document is not an array of chains");
      std::vector<std::vector<TokenSpan>> chains;
      for (const json& chain : doc) {
        if (!chain.is_array()) throw DataError("coreference entry '" + id + "': chain is not an array of spans");
        std::vector<TokenSpan> spans;
        for (const json& span : chain) {
          if (!span.is_array() || span.size() != 2 || !span[0].is_number_unsigned() || !span[1].is_number_unsigned()) {
            throw DataError("coreference entry '" + id + "': span must be [start, end]");
          }
          spans.push_back({span[0].get<std::size_t>(), span[1].get<std::size_t>()});
        }
        chains.push_back(std::move(spans));
      }
      cc.documents.push_back(std::move(chains));
    }
    out.emplace(id, std::move(cc));
  }
  return out;
}

std::map<std::string, CorefChains> load_coref_chains(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open coreference file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_coref_chains(buf.str());
}

std::vector<Mention> find_exact_mentions(const Sample& sample) {
  struct Key {
    std::string entity;
    std::optional<std::size_t> candidate;
  };
  std::unordered_map<std::string, Key> keys;
  std::size_t max_words = 0;
  auto add_key = [&](const std::string& text, std::optional<std::size_t> cand) {
    const std::string k = normalize_text(text);
    if (k.empty() || keys.contains(k)) return;
    keys.emplace(k, Key{text, cand});
    max_words = std::max<std::size_t>(max_words, std::count(k.begin(), k.end(), ' ') + 1);
  };
  for (std::size_t c = 0; c < sample.candidates.size(); ++c) add_key(sample.candidates[c], c);
  add_key(sample.query.subject, std::nullopt);

  std::vector<Mention> out;
  for (std::size_t d = 0; d < sample.documents.size(); ++d) {
    const Tokens& doc = sample.documents[d];
    std::vector<std::string> norm(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) norm[i] = normalize_token(doc[i]);

    std::vector<Mention> found;
    for (std::size_t i = 0; i < doc.size(); ++i) {
      if (norm[i].empty()) continue;
      std::string acc;
      std::size_t words = 0;
      for (std::size_t j = i; j < doc.size(); ++j) {
        if (norm[j].empty()) continue;
        if (words) acc += ' ';
        acc += norm[j];
        if (++words > max_words) break;
        if (auto it = keys.find(acc); it != keys.end()) {
          Mention m;
          m.doc = d;
          m.start = i;
          m.end = j + 1;
          m.entity = it->second.entity;
          m.candidate = it->second.candidate;
          m.source = MentionSource::exact;
          m.surface = acc;
          found.push_back(std::move(m));
        }
      }
    }
    std::stable_sort(found.begin(), found.end(), [](const Mention& a, const Mention& b) {
      const std::size_t la = a.end - a.start, lb = b.end - b.start;
      return la != lb ? la > lb : a.start < b.start;
    });
    std::vector<bool> taken(doc.size(), false);
    for (Mention& m : found) {
      bool free = true;
      for (std::size_t k = m.start; k < m.end && free; ++k) free = !taken[k];
      if (!free) continue;
      for (std::size_t k = m.start; k < m.end; ++k) taken[k] = true;
      out.push_back(std::move(m));
    }
  }
  sort_mentions(out);
  return out;
}

std::vector<Mention> merge_coref(const Sample& sample, std::vector<Mention> mentions, const CorefChains& chains,
                                 CorefMergeReport* report) {
  CorefMergeReport local;
  const std::vector<Mention> exact = mentions;
  std::size_t next_chain = 0;
  for (const Mention& m : mentions) {
    for (std::size_t c : m.chains) next_chain = std::max(next_chain, c + 1);
  }

  for (std::size_t d = 0; d < chains.documents.size(); ++d) {
    for (const std::vector<TokenSpan>& chain : chains.documents[d]) {
      bool in_bounds = d < sample.documents.size() && !chain.empty();
      for (const TokenSpan& s : chain) {
        in_bounds = in_bounds && s.start < s.end && s.end <= sample.documents[d].size();
      }
      if (!in_bounds) {
        ++local.rejected;
        continue;
      }
      std::set<std::string> entities;
      for (const TokenSpan& s : chain) {
        for (const Mention& m : exact) {
          if (m.source == MentionSource::exact && m.doc == d && overlaps(s.start, s.end, m.start, m.end)) {
            entities.insert(m.entity);
          }
        }
      }
      if (entities.empty()) {
        ++local.unmatched;
        continue;
      }
      if (entities.size() > 1) {
        ++local.ambiguous;
        continue;
      }
      ++local.accepted;
      const std::size_t chain_id = next_chain++;
      const std::string& entity = *entities.begin();
      std::optional<std::size_t> candidate;
      for (const Mention& m : exact) {
        if (m.entity == entity) candidate = m.candidate;
      }
      for (const TokenSpan& s : chain) {
        bool covered = false;
        for (Mention& m : mentions) {
          if (m.doc != d || !overlaps(s.start, s.end, m.start, m.end)) continue;
          covered = true;
          if (m.entity == entity && std::find(m.chains.begin(), m.chains.end(), chain_id) == m.chains.end()) {
            m.chains.push_back(chain_id);
          }
        }
        if (covered) continue;
        Mention m;
        m.doc = d;
        m.start = s.start;
        m.end = s.end;
        m.entity = entity;
        m.candidate = candidate;
        m.source = MentionSource::coref;
        m.surface = normalize_tokens(sample.documents[d], s.start, s.end);
        m.chains = {chain_id};
        mentions.push_back(std::move(m));
        ++local.added_mentions;
      }
    }
  }
  sort_mentions(mentions);
  if (report) *report = local;
  return mentions;
}

EntityGraph build_edges(std::vector<Mention> mentions, std::size_t candidate_count, const GraphOptions& options) {
  if (mentions.empty()) throw EmptyGraphError("empty graph: no mentions of candidates or query subject");
  EntityGraph g;
  g.enabled = options.enabled;
  g.nodes = std::move(mentions);
  const std::size_t n = g.nodes.size();
  const bool complement = options.enabled[idx(RelationType::complement)];
  g.complement_materialized = !complement || n <= options.complement_threshold;

  g.candidate_mentions.assign(candidate_count, {});
  for (std::size_t i = 0; i < n; ++i) {
    if (const auto& c = g.nodes[i].candidate) {
      if (*c >= candidate_count) throw DataError("mention refers to candidate index out of range");
      g.candidate_mentions[*c].push_back(i);
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const Mention& a = g.nodes[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      const Mention& b = g.nodes[j];
      const NodePair p{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)};
      std::array<bool, kRelationCount> rel{};
      rel[idx(RelationType::doc_based)] = a.doc == b.doc;
      rel[idx(RelationType::match)] =
          a.source == MentionSource::exact && b.source == MentionSource::exact && a.surface == b.surface;
      rel[idx(RelationType::coref)] = std::any_of(a.chains.begin(), a.chains.end(), [&](std::size_t c) {
        return std::find(b.chains.begin(), b.chains.end(), c) != b.chains.end();
      });
      bool connected = false;
      for (std::size_t r = 0; r < idx(RelationType::complement); ++r) {
        if (rel[r] && options.enabled[r]) {
          g.edges[r].push_back(p);
          connected = true;
        }
      }
      if (!connected && complement && g.complement_materialized) {
        g.edges[idx(RelationType::complement)].push_back(p);
      }
    }
  }
  return g;
}

EntityGraph build_graph(const Sample& sample, const CorefChains* chains, const GraphOptions& options) {
  std::vector<Mention> mentions = find_exact_mentions(sample);
  if (chains && !options.masked) mentions = merge_coref(sample, std::move(mentions), *chains);
  return build_edges(std::move(mentions), sample.candidates.size(), options);
}

std::vector<NodePair> EntityGraph::complement_pairs() const {
  if (!enabled[idx(RelationType::complement)]) return {};
  if (complement_materialized) return edges[idx(RelationType::complement)];
  const std::size_t n = nodes.size();
  std::vector<std::vector<bool>> linked(n, std::vector<bool>(n, false));
  for (std::size_t r = 0; r < idx(RelationType::complement); ++r) {
    for (const NodePair& p : edges[r]) linked[p.first][p.second] = true;
  }
  std::vector<NodePair> out;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!linked[i][j]) out.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> EntityGraph::neighbours() const {
  const std::size_t n = nodes.size();
  std::vector<std::vector<std::size_t>> out(n);
  if (enabled[idx(RelationType::complement)]) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) out[i].push_back(j);
      }
    }
    return out;
  }
  std::vector<std::set<std::size_t>> sets(n);
  for (std::size_t r = 0; r < idx(RelationType::complement); ++r) {
    for (const NodePair& p : edges[r]) {
      sets[p.first].insert(p.second);
      sets[p.second].insert(p.first);
    }
  }
  for (std::size_t i = 0; i < n; ++i) out[i].assign(sets[i].begin(), sets[i].end());
  return out;
}

GraphReport graph_report(const EntityGraph& g) {
  GraphReport r;
  const std::size_t n = g.node_count();
  r.node_count = n;
  std::vector<std::vector<bool>> linked(n, std::vector<bool>(n, false));
  for (RelationType rel : kRelations) {
    const std::vector<NodePair> pairs =
        rel == RelationType::complement ? g.complement_pairs() : g.edges[idx(rel)];
    r.edge_counts[idx(rel)] = pairs.size();
    for (const NodePair& p : pairs) linked[p.first][p.second] = linked[p.second][p.first] = true;
  }
  std::size_t covered = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) covered += linked[i][j] ? 1 : 0;
  }
  r.complete = covered == n * (n - 1) / 2;
  if (n == 0) {
    r.connected = false;
    return r;
  }
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = true;
  std::size_t visited = 1;
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop();
    for (std::size_t v = 0; v < n; ++v) {
      if (!seen[v] && linked[u][v]) {
        seen[v] = true;
        ++visited;
        q.push(v);
      }
    }
  }
  r.connected = visited == n;
  return r;
}

std::string graph_report_csv_header() {
  return "id,nodes,DOC_BASED,MATCH,COREF,COMPLEMENT,complete,connected\n";
}

std::string graph_report_csv_row(const std::string& id, const GraphReport& r) {
  std::string out = id + "," + std::to_string(r.node_count);
  for (std::size_t c : r.edge_counts) out += "," + std::to_string(c);
  out += std::string(",") + (r.complete ? "1" : "0") + "," + (r.connected ? "1" : "0") + "\n";
  return out;
}

std::string graph_to_json(const EntityGraph& g, const std::string& id) {
  json root;
  root["id"] = id;
  json nodes = json::array();
  for (const Mention& m : g.nodes) {
    json n;
    n["doc"] = m.doc;
    n["start"] = m.start;
    n["end"] = m.end;
    n["entity"] = m.entity;
    n["candidate"] = m.candidate ? json(*m.candidate) : json(nullptr);
    n["source"] = m.source == MentionSource::exact ? "EXACT" : "COREF";
    n["surface"] = m.surface;
    n["chains"] = m.chains;
    nodes.push_back(std::move(n));
  }
  root["nodes"] = std::move(nodes);
  json edges = json::object();
  json enabled = json::object();
  for (RelationType r : kRelations) {
    json list = json::array();
    for (const NodePair& p : g.edges[idx(r)]) list.push_back({p.first, p.second});
    edges[std::string(relation_name(r))] = std::move(list);
    enabled[std::string(relation_name(r))] = g.enabled[idx(r)];
  }
  root["edges"] = std::move(edges);
  root["enabled"] = std::move(enabled);
  root["complement_materialized"] = g.complement_materialized;
  root["candidate_mentions"] = g.candidate_mentions;
  return root.dump();
}

EntityGraph graph_from_json(std::string_view text, std::string* id) {
  json root;
  try {
    root = json::parse(text);
    EntityGraph g;
    if (id) *id = root.at("id").get<std::string>();
    for (const json& n : root.at("nodes")) {
      Mention m;
      m.doc = n.at("doc").get<std::size_t>();
      m.start = n.at("start").get<std::size_t>();
      m.end = n.at("end").get<std::size_t>();
      m.entity = n.at("entity").get<std::string>();
      if (!n.at("candidate").is_null()) m.candidate = n.at("candidate").get<std::size_t>();
      const std::string source = n.at("source").get<std::string>();
      if (source != "EXACT" && source != "COREF") throw DataError("graph dump: unknown mention source " + source);
      m.source = source == "EXACT" ? MentionSource::exact : MentionSource::coref;
      m.surface = n.at("surface").get<std::string>();
      m.chains = n.at("chains").get<std::vector<std::size_t>>();
      g.nodes.push_back(std::move(m));
    }
    for (RelationType r : kRelations) {
      const std::string name(relation_name(r));
      for (const json& p : root.at("edges").at(name)) {
        const auto a = p.at(0).get<std::uint32_t>(), b = p.at(1).get<std::uint32_t>();
        if (a >= b || b >= g.nodes.size()) throw DataError("graph dump: invalid edge in " + name);
        g.edges[idx(r)].push_back({a, b});
      }
      g.enabled[idx(r)] = root.at("enabled").at(name).get<bool>();
    }
    g.complement_materialized = root.at("complement_materialized").get<bool>();
    g.candidate_mentions = root.at("candidate_mentions").get<std::vector<std::vector<std::size_t>>>();
    return g;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed graph dump: ") + e.what());
  }
}

}  // namespace egcn
