#include "ppdiff/sampling.hpp"

#include <numeric>

#include "ppdiff/errors.hpp"
#include "ppdiff/parallel.hpp"
#include "ppdiff/posterior.hpp"

namespace ppdiff {

namespace {

constexpr std::uint64_t kSampleStream = 0x73616d706c65ULL;

Rng step_rng(std::uint64_t seed, std::uint64_t task, int t) {
  return Rng::derive(seed, {kSampleStream, task, static_cast<std::uint64_t>(t)});
}

// Rebuild chain labels from the denoiser's keep decisions: kept latent points
// become the retained part (they are the first rows of x0_hat, in order),
// everything else noise.
LabeledState relabel(const PointSet& x_t, const X0Hat& hat, int t) {
  LabeledState state;
  std::vector<bool> kept(x_t.size(), false);
  for (std::size_t idx : hat.kept_latent_indices) kept[idx] = true;
  std::vector<std::size_t> rest;
  rest.reserve(x_t.size() - hat.kept_latent_indices.size());
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    if (!kept[i]) rest.push_back(i);
  }
  state.retained = x_t.subset(hat.kept_latent_indices);
  state.retained_origin.resize(hat.kept_latent_indices.size());
  std::iota(state.retained_origin.begin(), state.retained_origin.end(), std::size_t{0});
  state.noise = x_t.subset(rest);
  state.t = t;
  return state;
}

}  // namespace

PointSet sample_unconditional(const Denoiser& model, const DiffusionSchedule& schedule,
                              const DomainPtr& domain, std::uint64_t seed, std::uint64_t task) {
  const int T = schedule.steps();
  Rng init = step_rng(seed, task, 0);
  PointSet x_t = sample_noise(schedule, domain, init);
  for (int t = T; t >= 2; --t) {
    Rng rng = step_rng(seed, task, t);
    const X0Hat hat = model.sample_x0_hat(x_t, t, rng);
    const LabeledState labeled = relabel(x_t, hat, t);
    x_t = posterior_sample(hat.x0_hat, labeled, schedule, rng).full();
  }
  Rng rng = step_rng(seed, task, 1);
  return model.sample_x0_hat(x_t, 1, rng).x0_hat;
}

PointSet sample_conditional(const Denoiser& model, const DiffusionSchedule& schedule,
                            const PointSet& known, const Mask& mask, std::uint64_t seed,
                            std::uint64_t task) {
  const DomainPtr domain = known.domain();
  for (std::size_t i = 0; i < known.size(); ++i) {
    if (!mask.value(known.point(i))) {
      throw MaskError("known point " + std::to_string(i) + " lies outside the conditioning mask");
    }
  }
  const int T = schedule.steps();
  Rng init = step_rng(seed, task, 0);
  PointSet x_t = sample_noise(schedule, domain, init);
  for (int t = T; t >= 1; --t) {
    Rng rng = step_rng(seed, task, t);
    const X0Hat hat = model.sample_x0_hat(x_t, t, rng);
    const LabeledState labeled = relabel(x_t, hat, t);
    const PointSet model_prev = posterior_sample(hat.x0_hat, labeled, schedule, rng).full();
    const PointSet known_prev = forward_marginal(known, t - 1, schedule, rng).full();
    // Complement region from the model chain, mask region from the pinned
    // forward marginal of the known points.
    const auto [in_mask_model, outside_model] = split_by_mask(model_prev, mask);
    const auto [in_mask_known, outside_known] = split_by_mask(known_prev, mask);
    (void)in_mask_model;
    (void)outside_known;
    x_t = superpose(outside_model, in_mask_known);
  }
  return split_by_mask(x_t, mask).second;
}

std::vector<PointSet> sample_batch(const Denoiser& model, const DiffusionSchedule& schedule,
                                   const DomainPtr& domain, const std::vector<SampleTask>& tasks,
                                   std::uint64_t seed, int workers) {
  for (const auto& task : tasks) {
    if (task.mask != nullptr && task.known == nullptr) {
      throw UsageError("sample_batch: conditional task needs known points (may be empty)");
    }
  }
  std::vector<PointSet> results(tasks.size());
  parallel_for(tasks.size(), workers, [&](std::size_t i) {
    const SampleTask& task = tasks[i];
    if (task.mask != nullptr) {
      results[i] = sample_conditional(model, schedule, *task.known, *task.mask, seed, i);
    } else {
      results[i] = sample_unconditional(model, schedule, domain, seed, i);
    }
  });
  return results;
}

std::vector<PointSet> sample_many(const Denoiser& model, const DiffusionSchedule& schedule,
                                  const DomainPtr& domain, int num, std::uint64_t seed,
                                  int workers) {
  if (num < 1) throw UsageError("sample_many: num must be >= 1");
  const std::vector<SampleTask> tasks(static_cast<std::size_t>(num));
  return sample_batch(model, schedule, domain, tasks, seed, workers);
}

}  // namespace ppdiff
