#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "core/schedule.hpp"
#include "vae/model.hpp"

namespace schedsyn::pipeline {

struct EpochLoss {
  double total = 0.0;
  double ce = 0.0;
  double mse = 0.0;  // continuous only
  double kl = 0.0;
};

struct TrainReport {
  std::vector<EpochLoss> train_losses;  // one per epoch
  std::vector<EpochLoss> val_losses;
  int best_epoch = -1;  // 0-based
  double best_val = 0.0;
  int64_t steps = 0;
  double wall_seconds = 0.0;
};

using EpochHook = std::function<void(int epoch, const EpochLoss& train, const EpochLoss& val)>;

// Trains until the validation loss plateaus (cfg.patience epochs without an
// improvement of at least cfg.min_delta) or cfg.max_epochs; the returned
// model carries the best-validation parameters. All randomness (shuffles,
// dropout, teacher forcing, latent noise) derives from `seed`. Threads split
// batches into fixed 256-sample chunks with gradient reduction in chunk
// order, so results do not depend on the thread count; models with batchnorm
// need full-batch statistics and always run single-threaded. Raises
// NumericError when the loss stops being finite.
vae::VaeModel train(const vae::ModelConfig& cfg, const core::ScheduleSample& train_sample,
                    const core::ScheduleSample& val_sample, uint64_t seed,
                    TrainReport* report = nullptr, int threads = 1,
                    const EpochHook& hook = nullptr);

}  // namespace schedsyn::pipeline
