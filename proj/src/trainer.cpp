#include "kg2text/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

namespace kg2text {

double lr_at(long step, long steps_per_epoch, const TrainConfig& cfg) {
  if (step < 0 || steps_per_epoch <= 0) {
    throw std::invalid_argument("lr_at needs step >= 0 and positive epoch size");
  }
  const long cycle = cfg.cycle_epochs * steps_per_epoch;
  if (cycle <= 1) return cfg.lr_max;
  const long pos = step % cycle;  // 0 at each cycle start (reset)
  const double phase =
      static_cast<double>(pos) / static_cast<double>(cycle - 1);
  return cfg.lr_min +
         (cfg.lr_max - cfg.lr_min) * 0.5 * (1.0 + std::cos(M_PI * phase));
}

double evaluate_loss(const GraphToTextModel& model,
                     const std::vector<PreparedInstance>& split) {
  std::mt19937_64 rng(0);  // dropout is off; never consulted
  double total = 0.0;
  for (const auto& inst : split) {
    total += model.instance_loss(inst, /*training=*/false, rng).loss.value();
  }
  return split.empty() ? 0.0 : total / static_cast<double>(split.size());
}

namespace {

std::vector<std::vector<double>> snapshot(const ParamList& params) {
  std::vector<std::vector<double>> data;
  data.reserve(params.size());
  for (const auto& p : params) data.push_back(p.tensor.data());
  return data;
}

void restore(const ParamList& params,
             const std::vector<std::vector<double>>& data) {
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor t = params[i].tensor;
    t.data() = data[i];
  }
}

}  // namespace

TrainLog train(GraphToTextModel& model,
               const std::vector<PreparedInstance>& train_split,
               const std::vector<PreparedInstance>& valid_split,
               const TrainConfig& cfg) {
  if (train_split.empty() || valid_split.empty()) {
    throw std::invalid_argument("train and valid splits must be non-empty");
  }
  const ParamList params = model.named_params();
  SgdMomentum opt(tensors_of(params), cfg.momentum);
  std::mt19937_64 rng(cfg.seed);

  const long n = static_cast<long>(train_split.size());
  const long batch = std::max(1, cfg.batch_size);
  const long steps_per_epoch = (n + batch - 1) / batch;

  TrainLog log;
  std::vector<std::vector<double>> best;
  double best_valid = HUGE_VAL;
  int epochs_without_improvement = 0;
  long global_step = 0;

  std::vector<size_t> order(train_split.size());
  std::iota(order.begin(), order.end(), size_t{0});

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    size_t clamped = 0;
    const double lr_first = lr_at(global_step, steps_per_epoch, cfg);
    double lr_last = lr_first;

    for (long start = 0; start < n; start += batch) {
      const long count = std::min(batch, n - start);
      opt.zero_grads();
      for (long k = 0; k < count; ++k) {
        const auto& inst = train_split[order[static_cast<size_t>(start + k)]];
        Tape tape;
        auto info = model.instance_loss(inst, /*training=*/true, rng);
        const double value = info.loss.value();
        if (!std::isfinite(value)) {
          throw std::runtime_error(
              "NaN loss at step " + std::to_string(global_step) + " (epoch " +
              std::to_string(epoch) + ")");
        }
        epoch_loss += value;
        clamped += info.clamped;
        // Mean over the batch: scale each instance loss by 1/count.
        tape.backward(affine(info.loss, 1.0 / static_cast<double>(count), 0.0));
      }
      lr_last = lr_at(global_step, steps_per_epoch, cfg);
      opt.step(lr_last);
      ++global_step;
    }
    epoch_loss /= static_cast<double>(n);

    const double valid_loss = evaluate_loss(model, valid_split);
    log.epochs.push_back(
        {epoch, epoch_loss, valid_loss, lr_first, lr_last, clamped});
    std::cerr << "epoch " << epoch << " train " << epoch_loss << " valid "
              << valid_loss << " lr " << lr_first << "->" << lr_last;
    if (clamped) std::cerr << " clamped " << clamped;
    std::cerr << "\n";

    if (valid_loss < best_valid) {
      best_valid = valid_loss;
      best = snapshot(params);
      log.best_epoch = epoch;
      epochs_without_improvement = 0;
    } else {
      ++epochs_without_improvement;
      if (cfg.patience > 0 && epochs_without_improvement >= cfg.patience) {
        log.early_stopped = true;
        break;
      }
    }
    if (cfg.stop_train_loss > 0 && epoch_loss < cfg.stop_train_loss) break;
  }

  if (!best.empty()) restore(params, best);
  log.best_valid_loss = best_valid;
  return log;
}

}  // namespace kg2text
