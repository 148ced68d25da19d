#include "egcn/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "egcn/parallel.hpp"

namespace egcn {

std::vector<Prediction> predict_all(const ModelParams& params, const std::vector<PreparedSample>& samples,
                                    std::size_t threads) {
  std::vector<Prediction> out(samples.size());
  parallel_for(samples.size(), threads == 0 ? default_thread_count() : threads,
               [&](std::size_t begin, std::size_t end, std::size_t) {
                 for (std::size_t i = begin; i < end; ++i) out[i] = predict(params, samples[i]);
               });
  return out;
}

std::size_t gold_rank(const std::vector<double>& probabilities, std::size_t gold) {
  std::size_t rank = 1;
  for (std::size_t c = 0; c < probabilities.size(); ++c) {
    if (c == gold) continue;
    if (probabilities[c] > probabilities[gold] || (probabilities[c] == probabilities[gold] && c < gold)) ++rank;
  }
  return rank;
}

std::vector<SampleOutcome> score_outcomes(const std::vector<Prediction>& predictions,
                                          const std::vector<PreparedSample>& samples) {
  if (predictions.size() != samples.size()) throw std::invalid_argument("prediction count does not match samples");
  std::vector<SampleOutcome> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const PreparedSample& s = samples[i];
    if (!s.gold) continue;
    const Prediction& p = predictions[i];
    SampleOutcome o;
    o.id = s.id;
    o.relation = s.relation;
    o.candidate_count = s.candidates.size();
    o.node_count = s.graph.node_count();
    o.gold_rank = gold_rank(p.probabilities, *s.gold);
    o.predicted = p.predicted;
    o.correct = p.predicted == *s.gold;
    o.answerable = p.answerable;
    out.push_back(std::move(o));
  }
  return out;
}

double accuracy(const std::vector<SampleOutcome>& outcomes) {
  if (outcomes.empty()) return 0.0;
  const auto hits = std::count_if(outcomes.begin(), outcomes.end(), [](const SampleOutcome& o) { return o.correct; });
  return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

Correlation correlate(std::vector<Bucket> buckets, std::size_t min_bucket) {
  Correlation c;
  std::vector<double> x, y;
  for (const Bucket& b : buckets) {
    if (b.count < min_bucket) continue;
    x.push_back(b.size);
    y.push_back(b.accuracy);
  }
  c.pearson = pearson(x, y);
  c.buckets = std::move(buckets);
  return c;
}

std::vector<Bucket> candidate_buckets(const std::vector<SampleOutcome>& outcomes) {
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> groups;  // size → (count, hits)
  for (const SampleOutcome& o : outcomes) {
    auto& g = groups[o.candidate_count];
    ++g.first;
    if (o.correct) ++g.second;
  }
  std::vector<Bucket> out;
  for (const auto& [size, g] : groups) {
    out.push_back({static_cast<double>(size), g.first, static_cast<double>(g.second) / static_cast<double>(g.first)});
  }
  return out;
}

std::vector<Bucket> node_decile_buckets(const std::vector<SampleOutcome>& outcomes) {
  std::vector<const SampleOutcome*> sorted;
  for (const SampleOutcome& o : outcomes) sorted.push_back(&o);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const SampleOutcome* a, const SampleOutcome* b) { return a->node_count < b->node_count; });
  const std::size_t n = sorted.size();
  std::vector<Bucket> out;
  for (std::size_t d = 0; d < 10; ++d) {
    const std::size_t begin = n * d / 10;
    const std::size_t end = n * (d + 1) / 10;
    if (begin == end) continue;
    double nodes = 0;
    std::size_t hits = 0;
    for (std::size_t i = begin; i < end; ++i) {
      nodes += static_cast<double>(sorted[i]->node_count);
      if (sorted[i]->correct) ++hits;
    }
    const double count = static_cast<double>(end - begin);
    out.push_back({nodes / count, end - begin, static_cast<double>(hits) / count});
  }
  return out;
}

namespace {

struct Tally {
  std::size_t count = 0;
  std::size_t hits = 0;
  std::size_t top2 = 0;
  std::size_t top5 = 0;
  std::vector<double> candidates;

  void add(const SampleOutcome& o) {
    ++count;
    if (o.correct) ++hits;
    if (o.gold_rank <= 2) ++top2;
    if (o.gold_rank <= 5) ++top5;
    candidates.push_back(static_cast<double>(o.candidate_count));
  }
  double rate(std::size_t k) const { return count ? static_cast<double>(k) / static_cast<double>(count) : 0.0; }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

EvalReport make_report(const std::vector<SampleOutcome>& outcomes) {
  EvalReport r;
  Tally all;
  std::map<std::string, Tally> per_relation;
  for (const SampleOutcome& o : outcomes) {
    all.add(o);
    per_relation[o.relation].add(o);
    if (!o.answerable) ++r.unanswerable;
  }
  r.samples = all.count;
  r.accuracy = all.rate(all.hits);
  r.p_at_2 = all.rate(all.top2);
  r.p_at_5 = all.rate(all.top5);
  for (const auto& [name, t] : per_relation) {
    RelationRow row;
    row.relation = name;
    row.support = t.count;
    row.accuracy = t.rate(t.hits);
    row.p_at_2 = t.rate(t.top2);
    row.p_at_5 = t.rate(t.top5);
    const double n = static_cast<double>(t.candidates.size());
    row.mean_candidates = std::accumulate(t.candidates.begin(), t.candidates.end(), 0.0) / n;
    double var = 0;
    for (double c : t.candidates) var += (c - row.mean_candidates) * (c - row.mean_candidates);
    row.std_candidates = std::sqrt(var / n);
    r.relations.push_back(row);
  }
  r.by_candidates = correlate(candidate_buckets(outcomes));
  r.by_nodes = correlate(node_decile_buckets(outcomes));
  return r;
}

Headline headline_relations(const EvalReport& report, std::size_t min_support, double min_candidates,
                            std::size_t count) {
  std::vector<RelationRow> eligible;
  for (const RelationRow& row : report.relations) {
    if (row.support >= min_support && row.mean_candidates >= min_candidates) eligible.push_back(row);
  }
  std::stable_sort(eligible.begin(), eligible.end(),
                   [](const RelationRow& a, const RelationRow& b) { return a.accuracy > b.accuracy; });
  Headline h;
  const std::size_t k = std::min(count, eligible.size());
  h.best.assign(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(k));
  h.worst.assign(eligible.end() - static_cast<std::ptrdiff_t>(k), eligible.end());
  std::reverse(h.worst.begin(), h.worst.end());
  return h;
}

std::string relations_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "relation,support,accuracy,p_at_2,p_at_5,mean_candidates,std_candidates\n";
  for (const RelationRow& r : report.relations) {
    out << r.relation << ',' << r.support << ',' << fmt(r.accuracy) << ',' << fmt(r.p_at_2) << ',' << fmt(r.p_at_5)
        << ',' << fmt(r.mean_candidates) << ',' << fmt(r.std_candidates) << '\n';
  }
  return out.str();
}

std::string buckets_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "axis,size,count,accuracy\n";
  for (const Bucket& b : report.by_candidates.buckets) {
    out << "candidates," << fmt(b.size) << ',' << b.count << ',' << fmt(b.accuracy) << '\n';
  }
  for (const Bucket& b : report.by_nodes.buckets) {
    out << "nodes," << fmt(b.size) << ',' << b.count << ',' << fmt(b.accuracy) << '\n';
  }
  return out.str();
}

std::string report_json(const EvalReport& report) {
  using nlohmann::json;
  auto optional_value = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json rel = json::array();
  for (const RelationRow& r : report.relations) {
    rel.push_back({{"relation", r.relation},
                   {"support", r.support},
                   {"accuracy", r.accuracy},
                   {"p_at_2", r.p_at_2},
                   {"p_at_5", r.p_at_5},
                   {"mean_candidates", r.mean_candidates},
                   {"std_candidates", r.std_candidates}});
  }
  const Headline h = headline_relations(report);
  auto names = [](const std::vector<RelationRow>& rows) {
    json a = json::array();
    for (const RelationRow& r : rows) a.push_back(r.relation);
    return a;
  };
  const json j = {{"samples", report.samples},
                  {"unanswerable", report.unanswerable},
                  {"accuracy", report.accuracy},
                  {"p_at_2", report.p_at_2},
                  {"p_at_5", report.p_at_5},
                  {"relations", rel},
                  {"headline", {{"best", names(h.best)}, {"worst", names(h.worst)}}},
                  {"pearson_candidates", optional_value(report.by_candidates.pearson)},
                  {"pearson_nodes", optional_value(report.by_nodes.pearson)}};
  return j.dump(2) + "\n";
}

std::string predictions_csv(const std::vector<Prediction>& predictions, const std::vector<PreparedSample>& samples) {
  std::ostringstream out;
  out << "id,predicted,probability,gold,answerable\n";
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const Prediction& p = predictions[i];
    const PreparedSample& s = samples[i];
    std::string candidate = p.candidates.empty() ? "" : p.candidates[p.predicted];
    std::string quoted = "\"";
    for (char c : candidate) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    quoted += '"';
    out << s.id << ',' << quoted << ',' << fmt(p.probabilities.empty() ? 0.0 : p.probabilities[p.predicted]) << ','
        << (s.gold ? std::to_string(*s.gold) : "") << ',' << (p.answerable ? 1 : 0) << '\n';
  }
  return out.str();
}

Prediction ensemble_combine(const std::vector<Prediction>& members) {
  if (members.empty()) throw std::invalid_argument("ensemble needs at least one member");
  const Prediction& first = members.front();
  const std::size_t k = first.candidates.size();
  for (const Prediction& m : members) {
    if (m.candidates != first.candidates || m.probabilities.size() != k) {
      throw std::invalid_argument("ensemble members disagree on the candidate list");
    }
  }
  std::vector<double> log_product(k, 0.0);
  for (const Prediction& m : members) {
    for (std::size_t c = 0; c < k; ++c) {
      log_product[c] += m.probabilities[c] > 0.0 ? std::log(m.probabilities[c])
                                                 : -std::numeric_limits<double>::infinity();
    }
  }
  Prediction out;
  out.candidates = first.candidates;
  out.best_node.assign(k, std::nullopt);
  out.probabilities.assign(k, 0.0);
  const double top = k ? *std::max_element(log_product.begin(), log_product.end())
                       : -std::numeric_limits<double>::infinity();
  if (!std::isfinite(top)) {
    out.answerable = false;
    if (k) out.probabilities.assign(k, 1.0 / static_cast<double>(k));
    out.predicted = 0;
    return out;
  }
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    out.probabilities[c] = std::exp(log_product[c] - top);
    total += out.probabilities[c];
  }
  for (double& p : out.probabilities) p /= total;
  out.predicted = static_cast<std::size_t>(std::max_element(log_product.begin(), log_product.end()) - log_product.begin());
  out.answerable = std::all_of(members.begin(), members.end(), [](const Prediction& m) { return m.answerable; });
  return out;
}

}  // namespace egcn
