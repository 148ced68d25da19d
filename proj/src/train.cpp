#include "egcn/train.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "egcn/evaluate.hpp"
#include "egcn/parallel.hpp"

namespace egcn {

double sample_gradients(const ModelParams& params, const PreparedSample& sample, bool training,
                        std::uint64_t dropout_seed, const ParameterList& list, Gradients& out, bool* floor_used) {
  if (!sample.gold) throw DataError("sample " + sample.id + " has no answer to train on");
  Tape tape;
  const ForwardResult r = forward(tape, params, sample, training, dropout_seed);
  const Var loss = nll_loss(r, *sample.gold, floor_used);
  if (!loss.valid()) return 0.0;
  tape.backward(loss);
  tape.accumulate(list, out);
  return loss.value()[0];
}

namespace {

double dev_accuracy(const ModelParams& params, const std::vector<PreparedSample>& dev, std::size_t threads) {
  return accuracy(score_outcomes(predict_all(params, dev, threads), dev));
}

ModelParams rounded_copy(const ModelParams& params) {
  ModelParams copy = params;
  round_to_float(copy);
  return copy;
}

}  // namespace

TrainResult train(ModelParams params, const std::vector<PreparedSample>& train_set,
                  const std::vector<PreparedSample>& dev_set, const TrainConfig& config) {
  if (config.epochs > 0 && train_set.empty()) throw DataError("training set is empty");
  if (config.batch == 0) throw std::invalid_argument("batch size must be at least 1");
  const std::size_t threads = config.threads == 0 ? default_thread_count() : config.threads;

  std::mt19937_64 order_rng(mix_seed(params.seed, 2));
  const std::uint64_t dropout_base = mix_seed(params.seed, 3);
  auto snapshot = [&order_rng](const ModelParams& p) {
    ModelParams copy = rounded_copy(p);
    std::ostringstream state;
    state << order_rng;
    copy.rng_state = state.str();
    return copy;
  };

  TrainResult result;
  result.best = snapshot(params);
  result.best_dev_accuracy = dev_accuracy(result.best, dev_set, threads);
  result.best_epoch = 0;

  ParameterList list = params.parameters();
  AdamState adam(list, config.adam);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), order_rng);
    EpochLog log;
    log.epoch = epoch;
    double loss_sum = 0.0;

    for (std::size_t begin = 0; begin < order.size(); begin += config.batch) {
      const std::size_t end = std::min(order.size(), begin + config.batch);
      const std::size_t workers = std::clamp<std::size_t>(threads, 1, end - begin);
      std::vector<Gradients> partial(workers, Gradients(list));
      std::vector<double> losses(end - begin, 0.0);
      std::vector<char> floors(end - begin, 0), unscored(end - begin, 0);
      parallel_for(end - begin, workers, [&](std::size_t lo, std::size_t hi, std::size_t w) {
        for (std::size_t k = lo; k < hi; ++k) {
          const std::size_t position = begin + k;
          const PreparedSample& s = train_set[order[position]];
          const std::uint64_t seed = mix_seed(dropout_base, (epoch - 1) * order.size() + position);
          bool floor = false;
          try {
            losses[k] = sample_gradients(params, s, true, seed, list, partial[w], &floor);
          } catch (const NumericalError& e) {
            throw NumericalError("epoch " + std::to_string(epoch) + ", sample " + s.id + ": " + e.what());
          }
          floors[k] = floor;
          unscored[k] = s.graph.candidate_mentions.empty() ||
                        std::all_of(s.graph.candidate_mentions.begin(), s.graph.candidate_mentions.end(),
                                    [](const auto& m) { return m.empty(); });
        }
      });
      Gradients total = std::move(partial[0]);
      for (std::size_t w = 1; w < workers; ++w) total += partial[w];
      total.scale(1.0 / static_cast<double>(end - begin));
      adam_step(list, total, adam);
      for (std::size_t k = 0; k < losses.size(); ++k) {
        loss_sum += losses[k];
        log.floor_events += static_cast<std::size_t>(floors[k]);
        log.unscored += static_cast<std::size_t>(unscored[k]);
      }
    }

    log.mean_loss = order.empty() ? 0.0 : loss_sum / static_cast<double>(order.size());
    ModelParams candidate = snapshot(params);
    log.dev_accuracy = dev_accuracy(candidate, dev_set, threads);
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.log.push_back(log);

    if (log.dev_accuracy > result.best_dev_accuracy) {
      result.best = std::move(candidate);
      result.best_dev_accuracy = log.dev_accuracy;
      result.best_epoch = epoch;
      stale = 0;
    } else {
      ++stale;
    }
    if (config.progress) {
      nlohmann::json line = {{"epoch", epoch},
                             {"loss", log.mean_loss},
                             {"dev_accuracy", log.dev_accuracy},
                             {"best_dev_accuracy", result.best_dev_accuracy},
                             {"floor_events", log.floor_events},
                             {"seconds", log.seconds}};
      if (!config.label.empty()) line["run"] = config.label;
      *config.progress << line.dump() << std::endl;
    }
    if (stale >= config.patience) {
      result.stopped_early = epoch < config.epochs;
      break;
    }
  }
  return result;
}

}  // namespace egcn
