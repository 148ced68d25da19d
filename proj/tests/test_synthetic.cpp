#include <doctest.h>

#include <algorithm>
#include <deque>
#include <limits>
#include <set>

#include "egcn/graph.hpp"
#include "egcn/synthetic.hpp"

using namespace egcn;

namespace {

constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();

/// Hop distance between entities, where two entities touch when they share a document.
std::map<std::string, std::size_t> entity_distances(const Sample& s) {
  std::map<std::string, std::set<std::string>> adjacent;
  for (const Tokens& doc : s.documents) {
    std::string text = " ";
    for (const auto& t : doc) text += t + " ";
    std::vector<std::string> present;
    for (const std::string& c : s.candidates) {
      if (text.find(" " + c + " ") != std::string::npos) present.push_back(c);
    }
    if (text.find(" " + s.query.subject + " ") != std::string::npos) present.push_back(s.query.subject);
    for (const auto& a : present) {
      for (const auto& b : present) {
        if (a != b) adjacent[a].insert(b);
      }
    }
  }
  std::map<std::string, std::size_t> dist = {{s.query.subject, 0}};
  std::deque<std::string> queue = {s.query.subject};
  while (!queue.empty()) {
    const std::string e = queue.front();
    queue.pop_front();
    for (const auto& n : adjacent[e]) {
      if (dist.emplace(n, dist[e] + 1).second) queue.push_back(n);
    }
  }
  return dist;
}

/// Shortest path in mention hops over DOC-BASED and MATCH edges from any subject mention.
std::vector<std::size_t> mention_distances(const EntityGraph& g) {
  std::vector<std::vector<std::size_t>> adj(g.node_count());
  for (RelationType r : {RelationType::doc_based, RelationType::match}) {
    for (const auto& [a, b] : g.edges[static_cast<std::size_t>(r)]) {
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
  }
  std::vector<std::size_t> dist(g.node_count(), kUnreached);
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    if (!g.nodes[i].candidate) {
      dist[i] = 0;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    for (std::size_t j : adj[i]) {
      if (dist[j] == kUnreached) {
        dist[j] = dist[i] + 1;
        queue.push_back(j);
      }
    }
  }
  return dist;
}

std::string kind_of(const std::string& entity) { return entity.substr(entity.rfind(' ') + 1); }

}  // namespace

TEST_CASE("generated samples have the advertised shape") {
  const auto samples = generate_two_hop(200, 9);
  CHECK(samples == generate_two_hop(200, 9));
  CHECK(samples != generate_two_hop(200, 10));
  std::set<std::string> ids;
  for (const Sample& s : samples) {
    ids.insert(s.id);
    CHECK(s.id.rfind("synth_", 0) == 0);
    CHECK(s.documents.size() == 6);
    CHECK(s.candidates.size() == 8);
    CHECK(std::set<std::string>(s.candidates.begin(), s.candidates.end()).size() == 8);
    REQUIRE(s.answer_index());
    CHECK(kind_of(s.query.subject) == "org");
    CHECK(s.query.relation == "two_hop");
  }
  CHECK(ids.size() == samples.size());
}

TEST_CASE("the answer is the only end entity reachable from the subject") {
  for (const Sample& s : generate_two_hop(300, 21)) {
    const auto dist = entity_distances(s);
    REQUIRE(dist.count(*s.answer));
    CHECK(dist.at(*s.answer) == 2);
    for (const std::string& c : s.candidates) {
      if (c == *s.answer) continue;
      // only the bridge entity is also reachable
      if (dist.count(c)) CHECK(dist.at(c) == 1);
    }
    CHECK(dist.size() == 3);

    const EntityGraph g = build_graph(s, nullptr);
    const auto hops = mention_distances(g);
    const std::size_t answer = *s.answer_index();
    for (std::size_t c = 0; c < s.candidates.size(); ++c) {
      std::size_t best = kUnreached;
      for (std::size_t m : g.candidate_mentions[c]) best = std::min(best, hops[m]);
      if (c == answer) {
        CHECK(best == 3);
      } else {
        CHECK((best == kUnreached || best <= 2));
      }
    }
  }
}

TEST_CASE("kind cue follows the informative fraction") {
  auto kinds = [](const Sample& s, std::initializer_list<const char*> family) {
    std::set<std::string> out;
    for (const std::string& c : s.candidates) {
      const std::string k = kind_of(c);
      for (const char* f : family) {
        if (k == f) out.insert(k);
      }
    }
    return out;
  };
  const std::initializer_list<const char*> ends = {"city", "river", "island"};
  const std::initializer_list<const char*> middles = {"band", "firm", "club"};
  auto informative = [&](const Sample& s) { return kinds(s, ends).size() == 3; };

  SyntheticOptions none;
  none.informative_fraction = 0.0;
  for (const Sample& s : generate_two_hop(100, 4, none)) CHECK(kinds(s, ends).size() == 1);

  SyntheticOptions all;
  all.informative_fraction = 1.0;
  for (const Sample& s : generate_two_hop(100, 4, all)) {
    REQUIRE(informative(s));
    const auto m = kinds(s, middles);
    REQUIRE(m.size() == 1);
    // middle kind i pairs with end kind i
    const auto mi = std::find(middles.begin(), middles.end(), *m.begin()) - middles.begin();
    const auto ei = std::find(ends.begin(), ends.end(), kind_of(*s.answer)) - ends.begin();
    CHECK(mi == ei);
  }

  SyntheticOptions half;
  half.informative_fraction = 0.5;
  const auto mixed = generate_two_hop(2000, 5, half);
  const auto cued = std::count_if(mixed.begin(), mixed.end(), informative);
  CHECK(cued > 900);
  CHECK(cued < 1100);
}
