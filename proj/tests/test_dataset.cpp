#include <doctest.h>

#include <random>

#include "egcn/dataset.hpp"
#include "egcn/synthetic.hpp"

using namespace egcn;

namespace {

const std::string kMini = std::string(EGCN_TEST_DATA) + "/mini.json";

bool contains_sequence(const Tokens& doc, const Tokens& pattern) {
  if (pattern.empty() || pattern.size() > doc.size()) return false;
  for (std::size_t i = 0; i + pattern.size() <= doc.size(); ++i) {
    if (std::equal(pattern.begin(), pattern.end(), doc.begin() + static_cast<std::ptrdiff_t>(i))) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("tokenizer splits on unicode whitespace and peels punctuation") {
  CHECK(tokenize("Erik Penser, (born 1942).") == Tokens{"Erik", "Penser", ",", "(", "born", "1942", ")", "."});
  CHECK(tokenize("a b c　d\te\nf") == Tokens{"a", "b", "c", "d", "e", "f"});
  CHECK(tokenize("") == Tokens{});
  CHECK(tokenize("  ...  ") == Tokens{".", ".", "."});
  CHECK(tokenize("don't") == Tokens{"don't"});
  CHECK(tokenize("café été") == Tokens{"café", "été"});
}

TEST_CASE("normalization") {
  CHECK(normalize_token("Sweden,") == "sweden");
  CHECK(normalize_token("...") == "");
  CHECK(normalize_text("The  Kingdom of SWEDEN.") == "the kingdom of sweden");
}

TEST_CASE("query parsing splits at the first space") {
  const Query q = Query::parse("place_of_birth erik penser");
  CHECK(q.relation == "place_of_birth");
  CHECK(q.subject == "erik penser");
  CHECK(Query::parse("lonely").subject.empty());
}

TEST_CASE("mini fixture parses with hand-counted statistics") {
  const ParseResult r = parse_dataset(kMini);
  REQUIRE(r.rejections.empty());
  REQUIRE(r.samples.size() == 20);
  CHECK(r.samples[0].id == "mini_00");
  CHECK(r.samples[0].documents[0] == Tokens{"anna", "berg", "was", "born", "oslo", "."});
  CHECK(r.samples[0].answer_index() == 0);

  const DatasetStats st = dataset_stats(r.samples);
  CHECK(st.sample_count == 20);
  CHECK(st.candidates.min == 2);
  CHECK(st.candidates.max == 9);
  CHECK(st.candidates.mean == doctest::Approx(88.0 / 20));
  CHECK(st.candidates.median == 4.0);
  CHECK(st.documents.min == 1);
  CHECK(st.documents.max == 5);
  CHECK(st.documents.mean == doctest::Approx(43.0 / 20));
  CHECK(st.documents.median == 2.0);
  CHECK(st.tokens_per_document.count == 43);
  CHECK(st.tokens_per_document.min == 5);
  CHECK(st.tokens_per_document.max == 10);
  CHECK(st.tokens_per_document.mean == doctest::Approx(321.0 / 43));
  CHECK(st.tokens_per_document.median == 7.0);

  CHECK(stats_csv(st) ==
        "field,min,max,mean,median\n"
        "candidates,2,9,4.4,4\n"
        "documents,1,5,2.15,2\n"
        "tokens_per_document,5,10,7.46512,7\n");
}

TEST_CASE("field statistics") {
  const FieldStats even = field_stats({4, 1, 3, 2});
  CHECK(even.median == 2.5);
  CHECK(even.mean == 2.5);
  const FieldStats odd = field_stats({5, 1, 9});
  CHECK(odd.median == 5);
  CHECK_THROWS_AS(field_stats({}), DataError);
  CHECK_THROWS_AS(dataset_stats({}), DataError);
}

TEST_CASE("invalid samples are rejected with reasons, valid ones kept") {
  const std::string text = R"([
    {"id": "ok", "query": "r s", "supports": ["s a b"], "candidates": ["a", "b"], "answer": "a"},
    {"id": "no-docs", "query": "r s", "supports": [], "candidates": ["a", "b"], "answer": "a"},
    {"id": "one-cand", "query": "r s", "supports": ["x"], "candidates": ["a"], "answer": "a"},
    {"id": "bad-answer", "query": "r s", "supports": ["x"], "candidates": ["a", "b"], "answer": "c"},
    {"id": "dup", "query": "r s", "supports": ["x"], "candidates": ["A.", "a"], "answer": "a"},
    {"id": "no-subject", "query": "r", "supports": ["x"], "candidates": ["a", "b"]},
    {"query": "r s", "supports": ["x"], "candidates": ["a", "b"]},
    {"id": "no-answer", "query": "r s", "supports": ["x"], "candidates": ["a", "b"]},
    7
  ])";
  const ParseResult r = parse_dataset_text(text);
  REQUIRE(r.samples.size() == 2);
  CHECK(r.samples[0].id == "ok");
  CHECK(r.samples[1].id == "no-answer");
  CHECK_FALSE(r.samples[1].answer.has_value());
  REQUIRE(r.rejections.size() == 7);
  CHECK(r.rejections[0].id == "no-docs");
  CHECK(r.rejections[0].reason == "no support documents");
  CHECK(r.rejections[1].reason == "fewer than two candidates");
  CHECK(r.rejections[2].reason.find("not among the candidates") != std::string::npos);
  CHECK(r.rejections[3].reason.find("duplicate") != std::string::npos);
  CHECK(r.rejections[4].reason == "query has no subject");
  CHECK(r.rejections[5].reason == "missing field 'id'");
  CHECK(r.rejections[6].position == 8);

  CHECK_THROWS_AS(parse_dataset_text("{not json"), DataError);
  CHECK_THROWS_AS(parse_dataset_text("{\"a\": 1}"), DataError);
  CHECK_THROWS_AS(parse_dataset("/nonexistent/file.json"), DataError);
}

TEST_CASE("serialize then parse is the identity") {
  const ParseResult r = parse_dataset(kMini);
  const ParseResult again = parse_dataset_text(serialize_dataset(r.samples));
  CHECK(again.samples == r.samples);
}

TEST_CASE("masking replaces every entity and round-trips") {
  std::vector<Sample> samples = parse_dataset(kMini).samples;
  for (const Sample& s : generate_two_hop(50, 3)) samples.push_back(s);
  const MaskedDataset masked = mask_dataset(samples, 17);
  REQUIRE(masked.samples.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& orig = samples[i];
    const Sample& m = masked.samples[i];
    CAPTURE(orig.id);
    CHECK(!validate(m).has_value());
    CHECK(m.answer_index() == orig.answer_index());
    for (const std::string& c : m.candidates) CHECK(c.rfind("MASK_", 0) == 0);
    CHECK(m.query.subject.rfind("MASK_", 0) == 0);
    CHECK(m.query.relation == orig.query.relation);
    for (const Tokens& doc : m.documents) {
      for (const std::string& c : orig.candidates) CHECK_FALSE(contains_sequence(doc, tokenize(c)));
    }
    const MaskTable& table = masked.tables.at(orig.id);
    CHECK(unmask_sample(m, table) == orig);
  }
  // same seed, same placeholders
  CHECK(mask_dataset(samples, 17).samples == masked.samples);
}

TEST_CASE("masking consistency: one placeholder per entity within a sample") {
  Sample s;
  s.id = "x";
  s.query = Query::parse("country erik penser");
  s.documents = {tokenize("erik penser lived in sweden . sweden is cold"), tokenize("MASK_1 sweden")};
  s.candidates = {"sweden", "norway"};
  s.answer = "sweden";
  MaskTable table;
  const Sample m = mask_sample(s, 5, &table);
  CHECK(m.documents[0][0] == m.query.subject);
  CHECK(m.documents[0][3] == m.candidates[0]);
  CHECK(m.documents[0][5] == m.candidates[0]);
  // an existing MASK_1 token is never reused as a placeholder
  CHECK(m.documents[1][0] == "MASK_1");
  for (const auto& [placeholder, original] : table) CHECK(placeholder != "MASK_1");
  CHECK(table.size() == 3);
}

TEST_CASE("split check") {
  const std::vector<Sample> train = generate_two_hop(5, 1);
  SyntheticOptions opt;
  opt.id_prefix = "dev";
  std::vector<Sample> dev = generate_two_hop(4, 2, opt);
  CHECK(split_check(train, dev).disjoint());
  dev.push_back(train[2]);
  const SplitReport r = split_check(train, dev);
  CHECK(r.overlapping_ids == std::vector<std::string>{train[2].id});
  CHECK(r.overlap_fraction() == doctest::Approx(1.0 / 5));
}

TEST_CASE("synthetic samples are valid and deterministic") {
  const auto a = generate_two_hop(30, 9);
  CHECK(a == generate_two_hop(30, 9));
  CHECK(a != generate_two_hop(30, 10));
  for (const Sample& s : a) {
    CHECK(!validate(s).has_value());
    CHECK(s.candidates.size() == 8);
    CHECK(s.documents.size() == 6);
    CHECK(s.answer_index().has_value());
  }
}
