#include "ppdiff/posterior.hpp"

#include <algorithm>
#include <cstring>

#include "ppdiff/errors.hpp"

namespace ppdiff {

double thin_posterior_prob(int t, const DiffusionSchedule& schedule) {
  if (t < 0 || t >= schedule.steps()) {
    throw UsageError("thin_posterior_prob: t out of range");
  }
  const double a_t = schedule.alpha_bar(t);
  const double a_next = schedule.alpha_bar(t + 1);
  return (a_t - a_next) / (1.0 - a_next);
}

double noise_posterior_keep_prob(int t, const DiffusionSchedule& schedule) {
  if (t < 0 || t >= schedule.steps()) {
    throw UsageError("noise_posterior_keep_prob: t out of range");
  }
  return schedule.beta_bar(t) / schedule.beta_bar(t + 1);
}

LabeledState posterior_sample(const PointSet& x0, const LabeledState& x_next,
                              const DiffusionSchedule& schedule, Rng& rng) {
  if (x_next.t < 1 || x_next.t > schedule.steps()) {
    throw UsageError("posterior_sample: x_next.t out of range");
  }
  if (x_next.retained_origin.size() != x_next.retained.size()) {
    throw UsageError("posterior_sample: retained_origin/retained size mismatch");
  }
  const int d = x0.dim();
  const std::size_t bytes = static_cast<std::size_t>(d) * sizeof(double);
  std::vector<bool> present(x0.size(), false);
  for (std::size_t i = 0; i < x_next.retained.size(); ++i) {
    const std::size_t o = x_next.retained_origin[i];
    if (o >= x0.size() ||
        std::memcmp(x_next.retained.raw_point(i).data(), x0.raw_point(o).data(), bytes) != 0) {
      throw UsageError("posterior_sample: retained part is not a labeled subset of x0");
    }
    present[o] = true;
  }

  const int t = x_next.t - 1;
  const double p_add = thin_posterior_prob(t, schedule);
  const double p_keep = noise_posterior_keep_prob(t, schedule);

  LabeledState out;
  out.t = t;
  // New retained set: previous survivors plus re-added points, in x0 order.
  std::vector<std::size_t> origin;
  origin.reserve(x0.size());
  for (std::size_t o = 0; o < x0.size(); ++o) {
    if (present[o] || rng.bernoulli(p_add)) origin.push_back(o);
  }
  out.retained = x0.subset(origin);
  out.retained_origin = std::move(origin);
  ThinResult tr = thin(x_next.noise, p_keep, rng);
  out.noise = std::move(tr.kept);
  return out;
}

}  // namespace ppdiff
