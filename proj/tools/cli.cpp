#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "egcn/ablation.hpp"
#include "egcn/checkpoint.hpp"
#include "egcn/evaluate.hpp"
#include "egcn/synthetic.hpp"

namespace egcn::cli {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EmbeddingOptions {
  std::string embeddings;
  std::size_t hash_dim = 0;
  std::uint64_t hash_seed = 1;
  std::string static_vectors;
  std::size_t static_hash_dim = 0;
  std::string chains;
  std::size_t threads = 0;

  void add_to(CLI::App& app, bool with_static) {
    app.add_option("--embeddings", embeddings, "Binary token-embedding file")->check(CLI::ExistingFile);
    app.add_option("--hash-dim", hash_dim, "Use hashed token vectors of this size instead of --embeddings");
    app.add_option("--hash-seed", hash_seed, "Seed for hashed token vectors")->capture_default_str();
    if (with_static) {
      app.add_option("--static-vectors", static_vectors, "Plain-text static word vectors")->check(CLI::ExistingFile);
      app.add_option("--static-hash-dim", static_hash_dim, "Hash-generated static vectors of this size");
    }
    app.add_option("--chains", chains, "Coreference chains (JSON)")->check(CLI::ExistingFile);
    app.add_option("--threads", threads, "Worker threads (default: EGCN_THREADS or all cores)");
  }

  EmbeddingStore load(const std::vector<const std::vector<Sample>*>& sets) const {
    if (!embeddings.empty() && hash_dim > 0) throw UsageError("--embeddings and --hash-dim are exclusive");
    if (!embeddings.empty()) return load_embeddings(embeddings);
    if (hash_dim == 0) throw UsageError("one of --embeddings or --hash-dim is required");
    EmbeddingStore store(hash_dim, Provenance::hash);
    for (const auto* s : sets) store.merge(hash_embed(*s, hash_dim, hash_seed));
    return store;
  }

  std::optional<EmbeddingStore> load_static(const std::vector<const std::vector<Sample>*>& sets) const {
    if (!static_vectors.empty()) return load_static_vectors(static_vectors);
    if (static_hash_dim == 0) return std::nullopt;
    std::vector<Sample> all;
    for (const auto* s : sets) all.insert(all.end(), s->begin(), s->end());
    return hash_static_vectors(all, static_hash_dim, hash_seed);
  }

  std::optional<std::map<std::string, CorefChains>> load_chains() const {
    if (chains.empty()) return std::nullopt;
    return load_coref_chains(chains);
  }
};

struct ModelOptions {
  std::size_t layers = 3;
  double dropout = 0.0;
  std::string size = "full";
  std::string edges = "typed";
  std::string head = "mlp";
  std::string pooling = "mean";
  bool masked = false;

  void add_to(CLI::App& app) {
    app.add_option("--layers", layers, "R-GCN layers")->capture_default_str();
    app.add_option("--dropout", dropout, "Dropout rate on node and scoring inputs")->capture_default_str()->check(
        CLI::Range(0.0, 0.99));
    app.add_option("--size", size, "Layer sizes: full | small")->capture_default_str()->check(
        CLI::IsMember({"full", "small"}));
    app.add_option("--edges", edges, "typed | untyped | induced")->capture_default_str();
    app.add_option("--head", head, "Scoring head: mlp | affine")->capture_default_str();
    app.add_option("--pooling", pooling, "Mention pooling: mean | first | last")->capture_default_str();
    app.add_flag("--masked", masked, "Masked data: coreference chains are not used");
  }

  void apply(const std::map<std::string, std::string>& grid) {
    for (const auto& [k, v] : grid) {
      if (k == "layers") layers = std::stoul(v);
      else if (k == "dropout") dropout = std::stod(v);
      else if (k == "size") size = v;
      else if (k == "head") head = v;
      else if (k == "pooling") pooling = v;
      else if (k == "masked") masked = v == "true" || v == "1";
    }
  }

  ModelConfig config(std::size_t raw) const {
    ModelConfig c;
    if (size == "small") {
      c.dims = {raw, 64, 32, 64, 128, 64};
      c.head_hidden = {64, 32};
    } else if (size == "full") {
      c.dims.raw = raw;
    } else {
      throw UsageError("unknown size '" + size + "'");
    }
    c.layers = layers;
    c.dropout = dropout;
    const auto e = parse_edge_mode(edges);
    const auto h = parse_score_head(head);
    const auto p = parse_pooling(pooling);
    if (!e) throw UsageError("unknown edge mode '" + edges + "'");
    if (!h) throw UsageError("unknown scoring head '" + head + "'");
    if (!p) throw UsageError("unknown pooling '" + pooling + "'");
    c.edge_mode = *e;
    c.score_head = *h;
    c.pooling = *p;
    c.graph.masked = masked;
    return c;
  }
};

struct TrainOptions {
  std::uint64_t seed = 1;
  std::size_t runs = 1;
  std::size_t batch = 32;
  std::size_t epochs = 20;
  std::size_t patience = 3;
  double lr = 1e-4;

  void add_to(CLI::App& app, std::size_t default_runs) {
    runs = default_runs;
    app.add_option("--seed", seed, "Master seed")->capture_default_str();
    app.add_option("--runs", runs, "Independent runs (seeds seed, seed+1, ...)")->capture_default_str()->check(
        CLI::PositiveNumber);
    app.add_option("--batch", batch, "Batch size")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--epochs", epochs, "Maximum epochs")->capture_default_str();
    app.add_option("--patience", patience, "Epochs without dev improvement before stopping")->capture_default_str();
    app.add_option("--lr", lr, "Adam learning rate")->capture_default_str();
  }

  void apply(const std::map<std::string, std::string>& grid) {
    for (const auto& [k, v] : grid) {
      if (k == "seed") seed = std::stoull(v);
      else if (k == "runs") runs = std::stoul(v);
      else if (k == "batch") batch = std::stoul(v);
      else if (k == "epochs") epochs = std::stoul(v);
      else if (k == "patience") patience = std::stoul(v);
      else if (k == "lr") lr = std::stod(v);
    }
    if (runs == 0 || batch == 0) throw UsageError("runs and batch must be positive");
  }

  TrainConfig config(std::size_t threads, std::ostream* progress) const {
    TrainConfig t;
    t.batch = batch;
    t.epochs = epochs;
    t.patience = patience;
    t.adam.learning_rate = lr;
    t.threads = threads;
    t.progress = progress;
    return t;
  }

  std::vector<std::uint64_t> seeds() const {
    std::vector<std::uint64_t> out;
    for (std::size_t r = 0; r < runs; ++r) out.push_back(seed + r);
    return out;
  }
};

const std::set<std::string> kGridKeys = {"variants", "runs", "seed", "layers", "dropout", "batch", "epochs",
                                         "patience", "lr", "size", "head", "pooling", "masked"};

std::vector<Sample> load_samples(const std::string& path, std::ostream& err) {
  if (path.empty()) throw UsageError("--dataset is required");
  ParseResult parsed = parse_dataset(path);
  for (const Rejection& r : parsed.rejections) {
    err << "rejected sample " << r.position << (r.id.empty() ? "" : " (" + r.id + ")") << ": " << r.reason << "\n";
  }
  if (parsed.samples.empty()) throw DataError("no valid samples in " + path);
  return std::move(parsed.samples);
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<PreparedSample> prepare_all(const std::vector<Sample>& samples, const EmbeddingStore& store,
                                        const ModelConfig& config,
                                        const std::optional<std::map<std::string, CorefChains>>& chains) {
  std::vector<PreparedSample> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) {
    const CorefChains* c = nullptr;
    if (chains) {
      auto it = chains->find(s.id);
      if (it != chains->end()) c = &it->second;
    }
    out.push_back(prepare_sample(s, store, config, c));
  }
  return out;
}

fs::path run_path(const fs::path& out, std::size_t run, std::size_t runs) {
  if (runs == 1) return out;
  fs::path p = out;
  p.replace_filename(out.stem().string() + "." + std::to_string(run + 1) + out.extension().string());
  return p;
}

void write_reports(const fs::path& dir, const std::vector<Prediction>& predictions,
                   const std::vector<PreparedSample>& samples, std::ostream& out) {
  const EvalReport report = make_report(score_outcomes(predictions, samples));
  fs::create_directories(dir);
  write_file(dir / "report.json", report_json(report));
  write_file(dir / "relations.csv", relations_csv(report));
  write_file(dir / "buckets.csv", buckets_csv(report));
  write_file(dir / "predictions.csv", predictions_csv(predictions, samples));
  nlohmann::json summary = {{"samples", report.samples},
                            {"accuracy", report.accuracy},
                            {"p_at_2", report.p_at_2},
                            {"p_at_5", report.p_at_5},
                            {"unanswerable", report.unanswerable}};
  out << summary.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entity-graph question answering over multiple documents"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  std::string dataset, dev, out_path;

  auto* stats = app.add_subcommand("stats", "Dataset statistics as CSV");
  stats->add_option("--dataset", dataset, "Dataset JSON")->required()->check(CLI::ExistingFile);
  stats->add_option("--out", out_path, "Write the CSV here instead of stdout");

  EmbeddingOptions graph_embedding;
  bool graph_masked = false;
  auto* graphs = app.add_subcommand("build-graphs", "Entity graphs as JSON lines plus a per-sample report");
  graphs->add_option("--dataset", dataset, "Dataset JSON")->required()->check(CLI::ExistingFile);
  graphs->add_option("--chains", graph_embedding.chains, "Coreference chains (JSON)")->check(CLI::ExistingFile);
  graphs->add_flag("--masked", graph_masked, "Masked data: coreference chains are not used");
  graphs->add_option("--out", out_path, "Output directory")->required();

  EmbeddingOptions train_embedding;
  ModelOptions train_model;
  TrainOptions train_options;
  std::string train_variant;
  auto* train_cmd = app.add_subcommand("train", "Train a model, keeping the best dev checkpoint");
  train_cmd->add_option("--dataset", dataset, "Training set JSON")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--dev", dev, "Development set JSON")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", out_path, "Checkpoint path")->required();
  train_cmd->add_option("--ablate", train_variant, "Train an ablation variant instead of the full model");
  train_embedding.add_to(*train_cmd, true);
  train_model.add_to(*train_cmd);
  train_options.add_to(*train_cmd, 1);

  EmbeddingOptions eval_embedding;
  std::string checkpoint;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--dataset", dataset, "Evaluation set JSON")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", out_path, "Report directory")->required();
  eval_embedding.add_to(*eval_cmd, false);

  EmbeddingOptions ens_embedding;
  std::vector<std::string> checkpoints;
  auto* ens_cmd = app.add_subcommand("ensemble", "Product-of-probabilities ensemble of checkpoints");
  ens_cmd->add_option("--dataset", dataset, "Evaluation set JSON")->required()->check(CLI::ExistingFile);
  ens_cmd->add_option("--checkpoints", checkpoints, "Member checkpoints")->required()->check(CLI::ExistingFile);
  ens_cmd->add_option("--out", out_path, "Report directory")->required();
  ens_embedding.add_to(*ens_cmd, false);

  EmbeddingOptions abl_embedding;
  ModelOptions abl_model;
  TrainOptions abl_options;
  std::string grid_path;
  std::vector<std::string> variant_names;
  auto* abl_cmd = app.add_subcommand("ablate", "Train and evaluate ablation variants over several seeds");
  abl_cmd->add_option("--dataset", dataset, "Training set JSON")->required()->check(CLI::ExistingFile);
  abl_cmd->add_option("--dev", dev, "Development set JSON")->required()->check(CLI::ExistingFile);
  abl_cmd->add_option("--out", out_path, "CSV path")->required();
  abl_cmd->add_option("--grid", grid_path, "key = value settings file")->check(CLI::ExistingFile);
  abl_cmd->add_option("--ablate", variant_names, "Variants to run (default: all)");
  abl_embedding.add_to(*abl_cmd, true);
  abl_model.add_to(*abl_cmd);
  abl_options.add_to(*abl_cmd, 3);

  std::uint64_t mask_seed = 1;
  auto* mask_cmd = app.add_subcommand("mask", "Replace candidate and subject strings by placeholders");
  mask_cmd->add_option("--dataset", dataset, "Dataset JSON")->required()->check(CLI::ExistingFile);
  mask_cmd->add_option("--seed", mask_seed, "Placeholder permutation seed")->capture_default_str();
  mask_cmd->add_option("--out", out_path, "Masked dataset path (tables go to <out>.tables.json)")->required();

  std::size_t synth_count = 1000;
  std::uint64_t synth_seed = 1;
  SyntheticOptions synth_options;
  auto* synth_cmd = app.add_subcommand("synth", "Generate the synthetic two-hop task");
  synth_cmd->add_option("--count", synth_count, "Samples")->capture_default_str();
  synth_cmd->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();
  synth_cmd->add_option("--informative", synth_options.informative_fraction,
                        "Fraction of samples whose entity kinds reveal the answer")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  synth_cmd->add_option("--prefix", synth_options.id_prefix, "Sample id prefix")->capture_default_str();
  synth_cmd->add_option("--out", out_path, "Dataset path")->required();

  std::vector<char*> argv;
  std::vector<std::string> storage = args;
  if (storage.empty()) storage.emplace_back("egcn");
  for (std::string& a : storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kUsage;
  }

  try {
    if (stats->parsed()) {
      const std::string csv = stats_csv(dataset_stats(load_samples(dataset, err)));
      if (out_path.empty()) {
        out << csv;
      } else {
        write_file(out_path, csv);
      }
    } else if (graphs->parsed()) {
      const std::vector<Sample> samples = load_samples(dataset, err);
      const auto chains = graph_embedding.load_chains();
      GraphOptions options;
      options.masked = graph_masked;
      std::string dump;
      std::string report = graph_report_csv_header();
      CorefMergeReport total;
      std::size_t empty = 0;
      for (const Sample& s : samples) {
        std::vector<Mention> mentions = find_exact_mentions(s);
        if (chains && !graph_masked) {
          auto it = chains->find(s.id);
          if (it != chains->end()) {
            CorefMergeReport r;
            mentions = merge_coref(s, std::move(mentions), it->second, &r);
            total.accepted += r.accepted;
            total.ambiguous += r.ambiguous;
            total.unmatched += r.unmatched;
            total.rejected += r.rejected;
            total.added_mentions += r.added_mentions;
          }
        }
        EntityGraph g;
        try {
          g = build_edges(std::move(mentions), s.candidates.size(), options);
        } catch (const EmptyGraphError&) {
          ++empty;
          g.candidate_mentions.assign(s.candidates.size(), {});
        }
        dump += graph_to_json(g, s.id) + "\n";
        report += graph_report_csv_row(s.id, graph_report(g));
      }
      const fs::path dir = out_path;
      fs::create_directories(dir);
      write_file(dir / "graphs.jsonl", dump);
      write_file(dir / "graph_report.csv", report);
      nlohmann::json summary = {{"samples", samples.size()},
                                {"empty_graphs", empty},
                                {"chains_accepted", total.accepted},
                                {"chains_ambiguous", total.ambiguous},
                                {"chains_unmatched", total.unmatched},
                                {"chains_rejected", total.rejected},
                                {"coref_mentions", total.added_mentions}};
      out << summary.dump() << "\n";
    } else if (train_cmd->parsed()) {
      const std::vector<Sample> train_samples = load_samples(dataset, err);
      const std::vector<Sample> dev_samples = load_samples(dev, err);
      const SplitReport split = split_check(train_samples, dev_samples);
      if (!split.disjoint()) err << "warning: " << split.overlapping_ids.size() << " ids occur in both splits\n";
      std::optional<Variant> variant = Variant::full;
      if (!train_variant.empty()) {
        variant = parse_variant(train_variant);
        if (!variant || *variant == Variant::full_ensemble) throw UsageError("unknown variant '" + train_variant + "'");
      }
      std::optional<EmbeddingStore> store;
      if (uses_static_vectors(*variant)) {
        store = train_embedding.load_static({&train_samples, &dev_samples});
        if (!store) throw UsageError("variant '" + train_variant + "' needs --static-vectors or --static-hash-dim");
      } else {
        store = train_embedding.load({&train_samples, &dev_samples});
      }
      const ModelConfig config = variant_config(train_model.config(store->dim()), *variant, store->dim());
      const auto chains = train_embedding.load_chains();
      const auto tr = prepare_all(train_samples, *store, config, chains);
      const auto dv = prepare_all(dev_samples, *store, config, chains);
      const TrainConfig tc = train_options.config(train_embedding.threads, &out);
      const auto seeds = train_options.seeds();
      for (std::size_t r = 0; r < seeds.size(); ++r) {
        ModelParams params(config);
        params.init(seeds[r]);
        TrainConfig run_config = tc;
        if (seeds.size() > 1) run_config.label = "run " + std::to_string(r + 1);
        const TrainResult result = train(std::move(params), tr, dv, run_config);
        const fs::path path = run_path(out_path, r, seeds.size());
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        save_checkpoint(result.best, path);
        nlohmann::json summary = {{"checkpoint", path.string()},
                                  {"seed", seeds[r]},
                                  {"best_epoch", result.best_epoch},
                                  {"best_dev_accuracy", result.best_dev_accuracy},
                                  {"stopped_early", result.stopped_early}};
        out << summary.dump() << "\n";
      }
    } else if (eval_cmd->parsed()) {
      const std::vector<Sample> samples = load_samples(dataset, err);
      const ModelParams params = load_checkpoint(checkpoint);
      if (eval_embedding.hash_dim > 0 && eval_embedding.hash_dim != params.config.dims.raw) {
        throw UsageError("--hash-dim must match the checkpoint input size " + std::to_string(params.config.dims.raw));
      }
      const EmbeddingStore store = eval_embedding.load({&samples});
      const auto prepared = prepare_all(samples, store, params.config, eval_embedding.load_chains());
      write_reports(out_path, predict_all(params, prepared, eval_embedding.threads), prepared, out);
    } else if (ens_cmd->parsed()) {
      const std::vector<Sample> samples = load_samples(dataset, err);
      const EmbeddingStore store = ens_embedding.load({&samples});
      const auto chains = ens_embedding.load_chains();
      std::vector<std::vector<Prediction>> members;
      std::vector<PreparedSample> reference;
      for (const std::string& path : checkpoints) {
        const ModelParams params = load_checkpoint(path);
        auto prepared = prepare_all(samples, store, params.config, chains);
        members.push_back(predict_all(params, prepared, ens_embedding.threads));
        if (reference.empty()) reference = std::move(prepared);
      }
      std::vector<Prediction> combined;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        std::vector<Prediction> row;
        for (const auto& m : members) row.push_back(m[i]);
        combined.push_back(ensemble_combine(row));
      }
      write_reports(out_path, combined, reference, out);
    } else if (abl_cmd->parsed()) {
      std::map<std::string, std::string> grid;
      if (!grid_path.empty()) {
        std::ifstream in(grid_path);
        std::stringstream buf;
        buf << in.rdbuf();
        grid = parse_key_values(buf.str());
        for (const auto& [k, v] : grid) {
          if (!kGridKeys.contains(k)) throw UsageError("unknown grid key '" + k + "'");
        }
        abl_model.apply(grid);
        abl_options.apply(grid);
        if (auto it = grid.find("variants"); it != grid.end()) {
          variant_names.clear();
          std::stringstream list(it->second);
          std::string name;
          while (std::getline(list, name, ',')) {
            name.erase(0, name.find_first_not_of(' '));
            name.erase(name.find_last_not_of(' ') + 1);
            if (!name.empty()) variant_names.push_back(name);
          }
        }
      }
      AblationSettings settings;
      if (variant_names.empty()) {
        for (const VariantInfo& v : variant_catalogue()) settings.variants.push_back(v.variant);
      }
      for (const std::string& name : variant_names) {
        const auto v = parse_variant(name);
        if (!v) throw UsageError("unknown variant '" + name + "'");
        settings.variants.push_back(*v);
      }
      AblationData data;
      data.train = load_samples(dataset, err);
      data.dev = load_samples(dev, err);
      const EmbeddingStore store = abl_embedding.load({&data.train, &data.dev});
      const auto static_store = abl_embedding.load_static({&data.train, &data.dev});
      const auto chains = abl_embedding.load_chains();
      data.embeddings = &store;
      data.static_vectors = static_store ? &*static_store : nullptr;
      data.chains = chains ? &*chains : nullptr;
      settings.model = abl_model.config(store.dim());
      settings.training = abl_options.config(abl_embedding.threads, &out);
      settings.seeds = abl_options.seeds();
      const std::string csv = ablation_csv(run_ablation(data, settings));
      write_file(out_path, csv);
      out << csv;
    } else if (mask_cmd->parsed()) {
      const MaskedDataset masked = mask_dataset(load_samples(dataset, err), mask_seed);
      write_file(out_path, serialize_dataset(masked.samples));
      write_file(out_path + ".tables.json", serialize_mask_tables(masked.tables));
    } else if (synth_cmd->parsed()) {
      write_file(out_path, serialize_dataset(generate_two_hop(synth_count, synth_seed, synth_options)));
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << "\n";
    return kData;
  } catch (const ShapeError& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& e) {
    err << "file error: " << e.what() << "\n";
    return kData;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::out_of_range& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }
  return kOk;
}

}  // namespace egcn::cli
