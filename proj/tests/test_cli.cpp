#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "cli.hpp"
#include "egcn/checkpoint.hpp"
#include "egcn/dataset.hpp"
#include "egcn/graph.hpp"
#include "egcn/synthetic.hpp"

using namespace egcn;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "egcn");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("egcn_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::string kMini = std::string(EGCN_TEST_DATA) + "/mini.json";

/// Last JSON line of a command's output.
nlohmann::json last_json(const std::string& out) {
  std::istringstream in(out);
  std::string line, last;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '{') last = line;
  }
  return nlohmann::json::parse(last);
}

}  // namespace

TEST_CASE("usage errors exit with 1, help with 0") {
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"--help"}).code == cli::kOk);
  CHECK(run({"frobnicate"}).code == cli::kUsage);
  CHECK(run({"stats"}).code == cli::kUsage);
  CHECK(run({"stats", "--dataset", ""}).code == cli::kUsage);
  CHECK(run({"stats", "--dataset", "/no/such/file.json"}).code == cli::kUsage);
  CHECK(run({"train", "--dataset", kMini, "--dev", kMini, "--out", "/tmp/x.ckpt", "--batch", "0"}).code ==
        cli::kUsage);
}

TEST_CASE("stats reproduces the fixture values") {
  const Result r = run({"stats", "--dataset", kMini});
  CHECK(r.code == cli::kOk);
  CHECK(r.out == stats_csv(dataset_stats(parse_dataset(kMini).samples)));
  CHECK(r.out.find("candidates,2,9,4.4,4\n") != std::string::npos);
}

TEST_CASE("invalid data exits with 2") {
  const fs::path dir = scratch("data");
  std::ofstream(dir / "bad.json") << R"([{"id": "x"}])";
  const Result r = run({"stats", "--dataset", (dir / "bad.json").string()});
  CHECK(r.code == cli::kData);
  CHECK(r.err.find("rejected sample 0 (x)") != std::string::npos);
  std::ofstream(dir / "broken.json") << "[{";
  CHECK(run({"stats", "--dataset", (dir / "broken.json").string()}).code == cli::kData);
}

TEST_CASE("build-graphs: stable dumps, coreference only when unmasked") {
  const fs::path dir = scratch("graphs");
  const std::vector<Sample> samples = generate_two_hop(8, 3);
  write_dataset(samples, dir / "data.json");
  // one chain per sample: the subject mention plus the final "." of its document
  nlohmann::json chains = nlohmann::json::object();
  for (const Sample& s : samples) {
    nlohmann::json docs = nlohmann::json::array();
    for (std::size_t d = 0; d < s.documents.size(); ++d) docs.push_back(nlohmann::json::array());
    for (const Mention& m : find_exact_mentions(s)) {
      if (m.candidate) continue;
      const std::size_t last = s.documents[m.doc].size();
      docs[m.doc].push_back({{m.start, m.end}, {last - 1, last}});
      break;
    }
    chains[s.id] = docs;
  }
  std::ofstream(dir / "chains.json") << chains.dump();

  auto coref_total = [](const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    std::size_t total = 0;
    while (std::getline(in, line)) {
      std::vector<std::string> cells;
      std::stringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) cells.push_back(cell);
      total += std::stoul(cells.at(4));
    }
    return total;
  };

  const std::string data = (dir / "data.json").string();
  const std::string chain_file = (dir / "chains.json").string();
  const Result plain = run({"build-graphs", "--dataset", data, "--out", (dir / "plain").string()});
  CHECK(plain.code == cli::kOk);
  CHECK(coref_total(read(dir / "plain" / "graph_report.csv")) == 0);

  const Result with = run({"build-graphs", "--dataset", data, "--chains", chain_file, "--out", (dir / "coref").string()});
  CHECK(with.code == cli::kOk);
  CHECK(last_json(with.out)["chains_accepted"] == 8);
  CHECK(coref_total(read(dir / "coref" / "graph_report.csv")) == 8);

  const Result masked = run({"build-graphs", "--dataset", data, "--chains", chain_file, "--masked", "--out",
                             (dir / "masked").string()});
  CHECK(masked.code == cli::kOk);
  CHECK(coref_total(read(dir / "masked" / "graph_report.csv")) == 0);

  CHECK(run({"build-graphs", "--dataset", data, "--out", (dir / "again").string()}).code == cli::kOk);
  CHECK(read(dir / "again" / "graphs.jsonl") == read(dir / "plain" / "graphs.jsonl"));

  CHECK(run({"build-graphs", "--dataset", kMini, "--out", (dir / "mini").string()}).code == cli::kOk);
  CHECK(read(dir / "mini" / "graphs.jsonl") == read(std::string(EGCN_TEST_DATA) + "/mini_graphs.jsonl"));
}

TEST_CASE("train, eval and ensemble round trip") {
  const fs::path dir = scratch("train");
  SyntheticOptions dev_options;
  dev_options.id_prefix = "dev";
  write_dataset(generate_two_hop(40, 1), dir / "train.json");
  write_dataset(generate_two_hop(30, 2, dev_options), dir / "dev.json");
  const std::string tr = (dir / "train.json").string(), dv = (dir / "dev.json").string();
  auto with = [](std::vector<std::string> args) {
    for (const char* a : {"--hash-dim", "12", "--threads", "1"}) args.push_back(a);
    if (args[0] == "train") args.insert(args.end(), {"--size", "small"});
    return run(args);
  };

  SUBCASE("zero epochs writes the untrained model") {
    const Result r = with({"train", "--dataset", tr, "--dev", dv, "--epochs", "0", "--out", (dir / "m0.ckpt").string()});
    CHECK(r.code == cli::kOk);
    const ModelParams loaded = load_checkpoint(dir / "m0.ckpt");
    ModelParams fresh(loaded.config);
    fresh.init(1);
    round_to_float(fresh);
    const auto a = loaded.parameters();
    const auto b = std::as_const(fresh).parameters();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i]->value() == b[i]->value());
  }

  SUBCASE("eval reproduces the logged accuracy; ensembles combine members") {
    const Result r = with({"train", "--dataset", tr, "--dev", dv, "--epochs", "2", "--batch", "8", "--lr", "1e-2",
                           "--runs", "2", "--out", (dir / "m.ckpt").string()});
    REQUIRE(r.code == cli::kOk);
    std::istringstream lines(r.out);
    std::string line;
    std::vector<nlohmann::json> summaries;
    while (std::getline(lines, line)) {
      const auto j = nlohmann::json::parse(line);
      if (j.contains("checkpoint")) summaries.push_back(j);
    }
    REQUIRE(summaries.size() == 2);
    for (const auto& s : summaries) {
      const Result e = with({"eval", "--dataset", dv, "--checkpoint", s["checkpoint"], "--out", (dir / "eval").string()});
      CHECK(e.code == cli::kOk);
      CHECK(last_json(e.out)["accuracy"].get<double>() == s["best_dev_accuracy"].get<double>());
    }
    for (const char* f : {"report.json", "relations.csv", "buckets.csv", "predictions.csv"}) {
      CHECK(fs::exists(dir / "eval" / f));
    }
    const Result ens = with({"ensemble", "--dataset", dv, "--checkpoints", summaries[0]["checkpoint"],
                             summaries[1]["checkpoint"], "--out", (dir / "ens").string()});
    CHECK(ens.code == cli::kOk);
    CHECK(last_json(ens.out)["samples"] == 30);
    const Result again = with({"ensemble", "--dataset", dv, "--checkpoints", summaries[0]["checkpoint"],
                               summaries[1]["checkpoint"], "--out", (dir / "ens2").string()});
    CHECK(read(dir / "ens" / "predictions.csv") == read(dir / "ens2" / "predictions.csv"));
  }

  SUBCASE("divergence exits with 3") {
    const Result r = with({"train", "--dataset", tr, "--dev", dv, "--epochs", "1", "--batch", "1", "--lr", "1e308",
                           "--out", (dir / "nan.ckpt").string()});
    CHECK(r.code == cli::kNumerical);
    CHECK(r.err.find("epoch 1") != std::string::npos);
  }

  SUBCASE("mismatched embeddings are a data error") {
    REQUIRE(with({"train", "--dataset", tr, "--dev", dv, "--epochs", "0", "--out", (dir / "m.ckpt").string()}).code ==
            cli::kOk);
    CHECK(run({"eval", "--dataset", dv, "--checkpoint", (dir / "m.ckpt").string(), "--hash-dim", "13", "--out",
               (dir / "e").string()})
              .code == cli::kUsage);
    std::ofstream(dir / "junk.ckpt") << "EGCNCKPT junk";
    CHECK(with({"eval", "--dataset", dv, "--checkpoint", (dir / "junk.ckpt").string(), "--out", (dir / "e").string()})
              .code == cli::kData);
  }
}

TEST_CASE("ablate reads a key-value grid") {
  const fs::path dir = scratch("ablate");
  SyntheticOptions dev_options;
  dev_options.id_prefix = "dev";
  write_dataset(generate_two_hop(20, 1), dir / "train.json");
  write_dataset(generate_two_hop(10, 2, dev_options), dir / "dev.json");
  std::ofstream(dir / "grid.txt") << "# quick grid\nvariants = full-ensemble, no-rgcn, no-coref, static-no-rgcn\n"
                                     "runs = 2\nepochs = 1\nsize = small\nmasked = true\n";
  const std::vector<std::string> base = {"ablate", "--dataset", (dir / "train.json").string(), "--dev",
                                         (dir / "dev.json").string(), "--hash-dim", "8", "--threads", "1"};
  auto with = [&](std::vector<std::string> extra) {
    std::vector<std::string> args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    return run(args);
  };
  const Result r = with({"--grid", (dir / "grid.txt").string(), "--out", (dir / "a.csv").string()});
  REQUIRE(r.code == cli::kOk);
  const std::string csv = read(dir / "a.csv");
  CHECK(csv.rfind("variant,label,runs,mean_accuracy,std_accuracy,run_accuracies,note\n", 0) == 0);
  CHECK(csv.find("\nfull-ensemble,full (ensemble),2,") != std::string::npos);
  CHECK(csv.find("\nno-rgcn,No R-GCN,2,") != std::string::npos);
  CHECK(csv.find("\nno-coref,No COREF,0,,,,skipped") != std::string::npos);
  CHECK(csv.find("\nstatic-no-rgcn,static vectors w/o R-GCN,0,,,,skipped: no static vectors") != std::string::npos);
  CHECK(csv.find("\nfull,") == std::string::npos);

  std::ofstream(dir / "bad_grid.txt") << "colour = blue\n";
  CHECK(with({"--grid", (dir / "bad_grid.txt").string(), "--out", (dir / "b.csv").string()}).code == cli::kUsage);
  CHECK(with({"--ablate", "no-such-variant", "--out", (dir / "c.csv").string()}).code == cli::kUsage);
}

TEST_CASE("mask writes placeholders and tables") {
  const fs::path dir = scratch("mask");
  const fs::path out = dir / "masked.json";
  CHECK(run({"mask", "--dataset", kMini, "--seed", "4", "--out", out.string()}).code == cli::kOk);
  const ParseResult masked = parse_dataset(out);
  CHECK(masked.samples.size() == 20);
  CHECK(masked.samples[0].candidates[0].rfind("MASK_", 0) == 0);
  CHECK(fs::exists(out.string() + ".tables.json"));
  CHECK(run({"mask", "--dataset", kMini, "--seed", "4", "--out", (dir / "again.json").string()}).code == cli::kOk);
  CHECK(read(out) == read(dir / "again.json"));
}
