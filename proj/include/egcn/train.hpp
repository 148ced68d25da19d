#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "egcn/model.hpp"
#include "egcn/nn.hpp"

namespace egcn {

struct TrainConfig {
  std::size_t batch = 32;
  std::size_t epochs = 20;
  std::size_t patience = 3;
  AdamConfig adam;
  std::size_t threads = 0;  // 0: default_thread_count()
  std::ostream* progress = nullptr;  // one JSON line per epoch
  std::string label;
};

struct EpochLog {
  std::size_t epoch = 0;
  double mean_loss = 0;
  double dev_accuracy = 0;
  std::size_t floor_events = 0;  // gold candidate had no mention
  std::size_t unscored = 0;      // no candidate had a mention
  double seconds = 0;
};

struct TrainResult {
  ModelParams best;  // rounded to checkpoint precision
  double best_dev_accuracy = 0;
  std::size_t best_epoch = 0;  // 0 = the initial parameters
  std::vector<EpochLog> log;
  bool stopped_early = false;
};

/// Loss and parameter gradients of one sample; returns the loss (0 when nothing was scored).
double sample_gradients(const ModelParams& params, const PreparedSample& sample, bool training,
                        std::uint64_t dropout_seed, const ParameterList& list, Gradients& out,
                        bool* floor_used = nullptr);

/// Mini-batch Adam on the mean per-sample gradient with early stopping on dev accuracy.
/// Order and dropout randomness derive from params.seed.
TrainResult train(ModelParams params, const std::vector<PreparedSample>& train_set,
                  const std::vector<PreparedSample>& dev_set, const TrainConfig& config);

}  // namespace egcn
