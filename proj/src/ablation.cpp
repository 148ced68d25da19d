#include "egcn/ablation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "egcn/evaluate.hpp"

namespace egcn {

namespace {

const std::vector<VariantInfo> kCatalogue = {
    {Variant::full_ensemble, "full-ensemble", "full (ensemble)"},
    {Variant::full, "full", "full (single)"},
    {Variant::static_rgcn, "static-rgcn", "static vectors with R-GCN"},
    {Variant::static_no_rgcn, "static-no-rgcn", "static vectors w/o R-GCN"},
    {Variant::no_rgcn, "no-rgcn", "No R-GCN"},
    {Variant::no_relation_types, "no-relation-types", "No relation types"},
    {Variant::no_doc_based, "no-doc-based", "No DOC-BASED"},
    {Variant::no_match, "no-match", "No MATCH"},
    {Variant::no_coref, "no-coref", "No COREF"},
    {Variant::no_complement, "no-complement", "No COMPLEMENT"},
    {Variant::induced_edges, "induced-edges", "Induced edges"},
};

const VariantInfo& info(Variant v) {
  return *std::find_if(kCatalogue.begin(), kCatalogue.end(), [v](const VariantInfo& i) { return i.variant == v; });
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct Run {
  double accuracy = 0;
  std::vector<Prediction> predictions;
};

}  // namespace

const std::vector<VariantInfo>& variant_catalogue() { return kCatalogue; }
std::string_view variant_name(Variant v) { return info(v).name; }
std::string_view variant_label(Variant v) { return info(v).label; }

std::optional<Variant> parse_variant(std::string_view name) {
  for (const VariantInfo& i : kCatalogue) {
    if (i.name == name) return i.variant;
  }
  return std::nullopt;
}

bool uses_static_vectors(Variant v) { return v == Variant::static_rgcn || v == Variant::static_no_rgcn; }

ModelConfig variant_config(const ModelConfig& full, Variant v, std::size_t static_dim) {
  ModelConfig c = full;
  auto drop = [&c](RelationType r) { c.graph.enabled[static_cast<std::size_t>(r)] = false; };
  switch (v) {
    case Variant::full:
    case Variant::full_ensemble:
      break;
    case Variant::static_rgcn:
      c.dims.raw = static_dim;
      break;
    case Variant::static_no_rgcn:
      c.dims.raw = static_dim;
      c.layers = 0;
      break;
    case Variant::no_rgcn:
      c.layers = 0;
      break;
    case Variant::no_relation_types:
      c.edge_mode = EdgeMode::untyped;
      break;
    case Variant::no_doc_based:
      drop(RelationType::doc_based);
      break;
    case Variant::no_match:
      drop(RelationType::match);
      break;
    case Variant::no_coref:
      drop(RelationType::coref);
      break;
    case Variant::no_complement:
      drop(RelationType::complement);
      break;
    case Variant::induced_edges:
      c.edge_mode = EdgeMode::induced;
      break;
  }
  return c;
}

std::vector<AblationRow> run_ablation(const AblationData& data, const AblationSettings& settings) {
  if (!data.embeddings) throw DataError("ablation needs an embedding store");
  if (settings.seeds.empty()) throw std::invalid_argument("ablation needs at least one seed");
  std::vector<Variant> wanted = settings.variants;
  const bool ensemble = std::count(wanted.begin(), wanted.end(), Variant::full_ensemble) > 0;
  if (ensemble && !std::count(wanted.begin(), wanted.end(), Variant::full)) wanted.push_back(Variant::full);

  std::vector<AblationRow> rows;
  std::vector<Run> full_runs;
  std::vector<PreparedSample> full_dev;
  for (const VariantInfo& vi : kCatalogue) {
    const Variant v = vi.variant;
    if (v == Variant::full_ensemble || !std::count(wanted.begin(), wanted.end(), v)) continue;
    AblationRow row;
    row.variant = v;
    if (v == Variant::no_coref && settings.model.graph.masked) {
      row.skipped = true;
      row.note = "skipped: masked data has no coreference edges";
      rows.push_back(row);
      continue;
    }
    const EmbeddingStore* store = uses_static_vectors(v) ? data.static_vectors : data.embeddings;
    if (!store) {
      row.skipped = true;
      row.note = "skipped: no static vectors supplied";
      rows.push_back(row);
      continue;
    }
    const ModelConfig config = variant_config(settings.model, v, store->dim());
    auto prepare = [&](const std::vector<Sample>& samples) {
      std::vector<PreparedSample> out;
      out.reserve(samples.size());
      for (const Sample& s : samples) {
        const CorefChains* chains = nullptr;
        if (data.chains) {
          auto it = data.chains->find(s.id);
          if (it != data.chains->end()) chains = &it->second;
        }
        out.push_back(prepare_sample(s, *store, config, chains));
      }
      return out;
    };
    const std::vector<PreparedSample> train_set = prepare(data.train);
    const std::vector<PreparedSample> dev_set = prepare(data.dev);
    for (std::uint64_t seed : settings.seeds) {
      ModelParams params(config);
      params.init(seed);
      TrainConfig tc = settings.training;
      tc.label = std::string(vi.name) + "/" + std::to_string(seed);
      TrainResult result = train(std::move(params), train_set, dev_set, tc);
      row.accuracies.push_back(result.best_dev_accuracy);
      if (v == Variant::full && ensemble) {
        Run run;
        run.accuracy = result.best_dev_accuracy;
        run.predictions = predict_all(result.best, dev_set, tc.threads);
        full_runs.push_back(std::move(run));
      }
    }
    if (v == Variant::full) full_dev = dev_set;
    rows.push_back(row);
  }

  for (AblationRow& row : rows) {
    row.runs = row.accuracies.size();
    if (row.runs == 0) continue;
    row.mean = std::accumulate(row.accuracies.begin(), row.accuracies.end(), 0.0) / static_cast<double>(row.runs);
    double var = 0;
    for (double a : row.accuracies) var += (a - row.mean) * (a - row.mean);
    row.std = row.runs > 1 ? std::sqrt(var / static_cast<double>(row.runs - 1)) : 0.0;
  }

  if (ensemble) {
    AblationRow row;
    row.variant = Variant::full_ensemble;
    std::vector<Prediction> combined;
    for (std::size_t i = 0; i < full_dev.size(); ++i) {
      std::vector<Prediction> members;
      for (const Run& r : full_runs) members.push_back(r.predictions[i]);
      combined.push_back(ensemble_combine(members));
    }
    row.mean = accuracy(score_outcomes(combined, full_dev));
    row.accuracies = {row.mean};
    row.runs = full_runs.size();
    row.note = "product of " + std::to_string(full_runs.size()) + " full runs";
    rows.insert(rows.begin(), row);
  }
  // the full row was only trained to feed the ensemble
  if (!std::count(settings.variants.begin(), settings.variants.end(), Variant::full)) {
    rows.erase(std::remove_if(rows.begin(), rows.end(), [](const AblationRow& r) { return r.variant == Variant::full; }),
               rows.end());
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "variant,label,runs,mean_accuracy,std_accuracy,run_accuracies,note\n";
  for (const AblationRow& r : rows) {
    out << variant_name(r.variant) << ',' << csv_field(std::string(variant_label(r.variant))) << ',' << r.runs << ',';
    if (r.skipped) {
      out << ",,,";
    } else {
      std::string runs;
      for (double a : r.accuracies) runs += (runs.empty() ? "" : ";") + fmt(a);
      out << fmt(r.mean) << ',' << fmt(r.std) << ',' << runs << ',';
    }
    out << csv_field(r.note) << '\n';
  }
  return out.str();
}

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("line " + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw DataError("line " + std::to_string(line_no) + ": empty key");
    out[key] = trim(std::string_view(line).substr(eq + 1));
  }
  return out;
}

}  // namespace egcn
