// Optimization schedule and the training loop: SGD with momentum under a
// cyclical cosine learning rate (warm restarts) and validation-loss early
// stopping with best-checkpoint restore.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "kg2text/model.hpp"
#include "kg2text/optim.hpp"

namespace kg2text {

struct TrainConfig {
  double lr_max = 0.25;
  double lr_min = 0.05;
  int cycle_epochs = 5;
  double momentum = 0.9;
  int max_epochs = 15;
  int batch_size = 8;
  uint64_t seed = 1;
  int patience = 2;            // <= 0 disables early stopping
  double stop_train_loss = 0;  // > 0: stop once the epoch train loss drops below
};

/// Cosine annealing from lr_max at each cycle start to lr_min at the last
/// step of the cycle (cycle_epochs * steps_per_epoch steps), then an instant
/// reset to lr_max.
double lr_at(long step, long steps_per_epoch, const TrainConfig& cfg);

struct EpochLog {
  int epoch;
  double train_loss;
  double valid_loss;
  double lr_first, lr_last;
  size_t clamped;
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  int best_epoch = 0;
  double best_valid_loss = 0.0;
  bool early_stopped = false;
};

/// Trains in place; on return the model holds the best-validation weights.
/// Aborts with a diagnostic naming the step when the loss turns NaN.
TrainLog train(GraphToTextModel& model,
               const std::vector<PreparedInstance>& train_split,
               const std::vector<PreparedInstance>& valid_split,
               const TrainConfig& cfg);

/// Mean teacher-forced loss without gradient recording.
double evaluate_loss(const GraphToTextModel& model,
                     const std::vector<PreparedInstance>& split);

}  // namespace kg2text
