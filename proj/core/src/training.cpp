#include "ppdiff/training.hpp"

#include <cmath>

#include "ppdiff/errors.hpp"
#include "ppdiff/metrics.hpp"
#include "ppdiff/parallel.hpp"
#include "ppdiff/sampling.hpp"

namespace ppdiff {

namespace {

constexpr std::uint64_t kShuffleStream = 0x73687566ULL;
constexpr std::uint64_t kElementStream = 0x656c656dULL;
constexpr std::uint64_t kEvalStream = 0x6576616cULL;

void validate(const std::vector<PointSet>& train_set, const std::vector<PointSet>& val_set,
              const TrainConfig& cfg, const DiffusionSchedule& schedule,
              const NeuralDenoiser& model) {
  if (train_set.empty() || val_set.empty()) {
    throw UsageError("train: training and validation splits must be nonempty");
  }
  const DomainPtr domain = train_set.front().domain();
  for (const auto& s : train_set) {
    if (!s.same_domain(train_set.front())) throw UsageError("train: mixed domains in training split");
  }
  for (const auto& s : val_set) {
    if (!s.same_domain(train_set.front())) throw UsageError("train: validation domain mismatch");
  }
  if (cfg.epochs_max < 1 || cfg.batch_size < 1 || cfg.early_stop_samples < 1 ||
      cfg.early_stop_patience < 1 || cfg.eval_every < 0 || cfg.workers < 1 ||
      !(cfg.lr > 0.0) || !(cfg.weight_decay >= 0.0) || !(cfg.clip_norm > 0.0)) {
    throw UsageError("train: config values must be positive");
  }
  if (cfg.eval_metric == EvalMetric::kCdMmd && !domain->ordered_axis().has_value()) {
    throw DomainError("train: cd_mmd evaluation requires a domain with an ordered axis");
  }
  if (model.config().dim != domain->dim()) {
    throw UsageError("train: model dimension does not match the data domain");
  }
  if (model.config().t_max != schedule.steps()) {
    throw UsageError("train: model step embedding range does not match the schedule");
  }
}

double validation_score(const NeuralDenoiser& model, const std::vector<PointSet>& val_set,
                        const TrainConfig& cfg, const DiffusionSchedule& schedule,
                        const DomainPtr& domain, std::uint64_t sample_seed) {
  const std::vector<PointSet> samples =
      sample_many(model, schedule, domain, cfg.early_stop_samples, sample_seed, cfg.workers);
  if (cfg.eval_metric == EvalMetric::kSlWasserstein) {
    return sl_wasserstein(cardinalities(samples), cardinalities(val_set));
  }
  return mmd(samples, val_set, SetDistanceKind::kCounting, std::nullopt, cfg.workers).value;
}

}  // namespace

EvalMetric eval_metric_from_string(const std::string& name) {
  if (name == "sl_wasserstein") return EvalMetric::kSlWasserstein;
  if (name == "cd_mmd") return EvalMetric::kCdMmd;
  throw UsageError("unknown eval metric: " + name);
}

std::string to_string(EvalMetric metric) {
  return metric == EvalMetric::kSlWasserstein ? "sl_wasserstein" : "cd_mmd";
}

int default_eval_every(std::size_t train_size) {
  const std::size_t cadence = std::max<std::size_t>(1, train_size / 100);
  return static_cast<int>(std::min<std::size_t>(10, cadence));
}

TrainResult train(NeuralDenoiser& model, const std::vector<PointSet>& train_set,
                  const std::vector<PointSet>& val_set, const TrainConfig& config,
                  const DiffusionSchedule& schedule) {
  validate(train_set, val_set, config, schedule, model);
  const DomainPtr domain = train_set.front().domain();
  const int T = schedule.steps();
  const std::size_t n = train_set.size();
  const int eval_every = config.eval_every > 0 ? config.eval_every : default_eval_every(n);
  const nn::AdamConfig adam{config.lr, config.weight_decay, config.clip_norm};

  TrainResult result;
  std::map<std::string, std::vector<double>> best_snapshot;
  int evals_since_best = 0;

  std::vector<std::size_t> order(n);
  for (int epoch = 1; epoch <= config.epochs_max; ++epoch) {
    Rng shuffle_rng = Rng::derive(config.seed, {kShuffleStream, static_cast<std::uint64_t>(epoch)});
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);
    }

    double bce_sum = 0.0, nll_sum = 0.0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t bsize = std::min<std::size_t>(config.batch_size, n - start);
      std::vector<nn::GradMap> sinks(bsize);
      std::vector<LossBreakdown> parts(bsize);
      parallel_for(bsize, config.workers, [&](std::size_t b) {
        const std::size_t slot = start + b;
        const PointSet& x0 = train_set[order[slot]];
        Rng rng = Rng::derive(config.seed, {kElementStream, static_cast<std::uint64_t>(epoch),
                                            static_cast<std::uint64_t>(slot)});
        const int t = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(T)));
        const LabeledState state = forward_marginal(x0, t, schedule, rng);
        auto loss = model.loss(x0, state);
        parts[b] = loss.breakdown;
        nn::backward(loss.graph_total, &sinks[b]);
      });

      nn::GradMap merged;
      const double scale = 1.0 / static_cast<double>(bsize);
      for (std::size_t b = 0; b < bsize; ++b) {
        if (!std::isfinite(parts[b].total)) {
          throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                             ", element " + std::to_string(order[start + b]));
        }
        bce_sum += parts[b].bce;
        nll_sum += parts[b].nll;
        for (const auto& [name, grad] : sinks[b]) {
          auto& acc = merged[name];
          if (acc.empty()) acc.assign(grad.size(), 0.0);
          for (std::size_t k = 0; k < grad.size(); ++k) acc[k] += grad[k];
        }
      }
      for (auto& [name, grad] : merged) {
        (void)name;
        for (double& g : grad) g *= scale;
      }
      nn::adam_step(model.params(), merged, adam);
    }

    TrainHistoryRow row;
    row.epoch = epoch;
    row.bce = bce_sum / static_cast<double>(n);
    row.nll = nll_sum / static_cast<double>(n);
    if (epoch % eval_every == 0) {
      const std::uint64_t sample_seed =
          splitmix64(config.seed ^ (kEvalStream + static_cast<std::uint64_t>(epoch)));
      const double score =
          validation_score(model, val_set, config, schedule, domain, sample_seed);
      row.val_metric = score;
      if (!result.best_val || score < *result.best_val) {
        result.best_val = score;
        result.best_epoch = epoch;
        best_snapshot = model.params().snapshot_values();
        evals_since_best = 0;
      } else {
        ++evals_since_best;
      }
    }
    result.history.push_back(row);
    result.epochs_run = epoch;
    if (evals_since_best >= config.early_stop_patience) break;
  }

  if (!best_snapshot.empty()) model.params().restore_values(best_snapshot);
  return result;
}

}  // namespace ppdiff
