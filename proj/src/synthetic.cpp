#include "egcn/synthetic.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <set>
#include <string>

#include "egcn/nn.hpp"

namespace egcn {

namespace {

constexpr std::array<const char*, 16> kSyllables = {"ka", "lo", "mi", "ren", "sa", "tor", "vel", "nu",
                                                    "bri", "dal", "fen", "go", "hir", "jas", "qui", "zo"};
constexpr std::array<const char*, 3> kMiddleKinds = {"band", "firm", "club"};
constexpr std::array<const char*, 3> kEndKinds = {"city", "river", "island"};
constexpr std::array<const char*, 8> kFiller = {"the", "records", "show", "that", "later", "also", "reportedly", "then"};

struct Generator {
  std::mt19937_64 rng;
  std::set<std::string> used;

  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

  std::string name() {
    for (;;) {
      std::string s;
      const std::size_t parts = 2 + pick(2);
      for (std::size_t k = 0; k < parts; ++k) s += kSyllables[pick(kSyllables.size())];
      if (used.insert(s).second) return s;
    }
  }

  std::string entity(const std::string& kind) { return name() + " " + kind; }

  void filler(Tokens& out, std::size_t max) {
    const std::size_t n = pick(max + 1);
    for (std::size_t k = 0; k < n; ++k) out.emplace_back(kFiller[pick(kFiller.size())]);
  }

  Tokens statement(const std::string& x, const std::string& rel, const std::string& y, std::size_t max) {
    Tokens out;
    filler(out, max);
    for (const std::string& t : tokenize(x)) out.push_back(t);
    out.push_back(rel);
    for (const std::string& t : tokenize(y)) out.push_back(t);
    filler(out, max);
    out.emplace_back(".");
    return out;
  }
};

}  // namespace

std::vector<Sample> generate_two_hop(std::size_t count, std::uint64_t seed, const SyntheticOptions& options) {
  std::vector<Sample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Generator g{std::mt19937_64(mix_seed(seed, i)), {}};
    const bool informative = std::bernoulli_distribution(options.informative_fraction)(g.rng);
    const std::size_t k = g.pick(3);

    std::array<std::string, 3> middle_kind;
    std::array<std::string, 3> end_kind;  // [answer, distractor 1, distractor 2]
    if (informative) {
      middle_kind.fill(kMiddleKinds[k]);
      std::array<std::size_t, 2> others = {(k + 1) % 3, (k + 2) % 3};
      if (g.pick(2)) std::swap(others[0], others[1]);
      end_kind = {kEndKinds[k], kEndKinds[others[0]], kEndKinds[others[1]]};
    } else {
      for (auto& m : middle_kind) m = kMiddleKinds[g.pick(3)];
      end_kind.fill(kEndKinds[k]);
    }

    const std::string subject = g.entity("org");
    const std::string bridge = g.entity(middle_kind[0]);
    const std::string answer = g.entity(end_kind[0]);
    const std::array<std::string, 2> starts = {g.entity("person"), g.entity("person")};
    const std::array<std::string, 2> middles = {g.entity(middle_kind[1]), g.entity(middle_kind[2])};
    const std::array<std::string, 2> ends = {g.entity(end_kind[1]), g.entity(end_kind[2])};

    Sample s;
    s.id = options.id_prefix + "_" + std::to_string(i);
    s.query = Query::parse("two_hop " + subject);
    const std::size_t f = options.max_filler;
    s.documents = {g.statement(subject, "r1", bridge, f), g.statement(bridge, "r2", answer, f),
                   g.statement(starts[0], "r1", middles[0], f), g.statement(middles[0], "r2", ends[0], f),
                   g.statement(starts[1], "r1", middles[1], f), g.statement(middles[1], "r2", ends[1], f)};
    std::shuffle(s.documents.begin(), s.documents.end(), g.rng);
    s.candidates = {answer, bridge, starts[0], starts[1], middles[0], middles[1], ends[0], ends[1]};
    std::shuffle(s.candidates.begin(), s.candidates.end(), g.rng);
    s.answer = answer;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace egcn
