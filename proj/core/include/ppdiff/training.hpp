#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ppdiff/denoiser.hpp"
#include "ppdiff/point_set.hpp"
#include "ppdiff/schedule.hpp"

namespace ppdiff {

enum class EvalMetric { kSlWasserstein, kCdMmd };

EvalMetric eval_metric_from_string(const std::string& name);
std::string to_string(EvalMetric metric);

struct TrainConfig {
  int epochs_max = 5000;
  int batch_size = 128;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  double clip_norm = 2.0;
  int early_stop_samples = 100;
  int early_stop_patience = 50;  // evaluations without improvement before stopping
  EvalMetric eval_metric = EvalMetric::kSlWasserstein;
  int eval_every = 0;  // epochs between evaluations; 0 picks a cadence from the dataset size
  std::uint64_t seed = 1;
  int workers = 1;
};

struct TrainHistoryRow {
  int epoch = 0;
  double bce = 0.0;  // epoch means over all training elements
  double nll = 0.0;
  std::optional<double> val_metric;  // set on evaluation epochs
};

struct TrainResult {
  std::vector<TrainHistoryRow> history;
  int epochs_run = 0;
  int best_epoch = 0;  // 0 when no evaluation ever ran
  std::optional<double> best_val;
};

// Every epoch for small datasets, every 10 epochs from 1000 instances up.
int default_eval_every(std::size_t train_size);

// Uniform-step denoising training with validation-sampling early stopping.
// Per batch element: t ~ Uniform{1..T}, corrupt via forward_marginal, build the
// loss graph, and backpropagate into a per-element gradient sink; sinks are
// merged in element order, so training is bitwise reproducible for any worker
// count. The model is left at the best-scoring checkpoint observed.
TrainResult train(NeuralDenoiser& model, const std::vector<PointSet>& train_set,
                  const std::vector<PointSet>& val_set, const TrainConfig& config,
                  const DiffusionSchedule& schedule);

}  // namespace ppdiff
