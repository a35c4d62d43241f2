#include "ppdiff/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "ppdiff/errors.hpp"

namespace ppdiff {

ScheduleShape schedule_shape_from_string(const std::string& s) {
  if (s == "linear") return ScheduleShape::kLinear;
  if (s == "cosine") return ScheduleShape::kCosine;
  throw UsageError("unknown schedule shape: " + s);
}

std::string to_string(ScheduleShape s) {
  return s == ScheduleShape::kLinear ? "linear" : "cosine";
}

DiffusionSchedule::DiffusionSchedule(std::vector<double> alpha_bar,
                                     std::vector<double> beta_bar, double noise_rate)
    : alpha_bar_(std::move(alpha_bar)), beta_bar_(std::move(beta_bar)), noise_rate_(noise_rate) {
  const int T = static_cast<int>(alpha_bar_.size());
  if (T < 2) throw UsageError("DiffusionSchedule: need at least 2 steps");
  if (beta_bar_.size() != alpha_bar_.size()) {
    throw UsageError("DiffusionSchedule: alpha_bar/beta_bar length mismatch");
  }
  if (!(noise_rate_ >= 0.0) || !std::isfinite(noise_rate_)) {
    throw UsageError("DiffusionSchedule: noise_rate must be finite and nonnegative");
  }
  double prev_a = 1.0, prev_b = 0.0;
  for (int t = 1; t <= T; ++t) {
    const double a = alpha_bar_[t - 1], b = beta_bar_[t - 1];
    if (!(a > 0.0 && a < 1.0)) {
      throw UsageError("DiffusionSchedule: alpha_bar must lie in (0, 1)");
    }
    if (!(a < prev_a)) throw UsageError("DiffusionSchedule: alpha_bar must strictly decrease");
    if (!(b > prev_b) || !(b <= 1.0)) {
      throw UsageError("DiffusionSchedule: beta_bar must strictly increase to 1");
    }
    prev_a = a;
    prev_b = b;
  }
  if (!(alpha_bar_[T - 1] <= 1e-3)) {
    throw UsageError("DiffusionSchedule: alpha_bar(T) must be <= 1e-3");
  }
  if (beta_bar_[T - 1] != 1.0) {
    throw UsageError("DiffusionSchedule: beta_bar(T) must equal 1");
  }
}

double DiffusionSchedule::alpha_bar(int t) const {
  if (t == 0) return 1.0;
  if (t < 1 || t > steps()) throw UsageError("alpha_bar: t out of range");
  return alpha_bar_[t - 1];
}

double DiffusionSchedule::beta_bar(int t) const {
  if (t == 0) return 0.0;
  if (t < 1 || t > steps()) throw UsageError("beta_bar: t out of range");
  return beta_bar_[t - 1];
}

double DiffusionSchedule::alpha(int t) const { return alpha_bar(t) / alpha_bar(t - 1); }

double DiffusionSchedule::beta(int t) const { return beta_bar(t) - beta_bar(t - 1); }

DiffusionSchedule make_schedule(int steps, ScheduleShape shape, double expected_count,
                                double domain_volume) {
  if (steps < 2) throw UsageError("make_schedule: steps must be >= 2");
  if (!(expected_count > 0.0) || !std::isfinite(expected_count)) {
    throw UsageError("make_schedule: expected_count must be positive");
  }
  if (!(domain_volume > 0.0) || !std::isfinite(domain_volume)) {
    throw UsageError("make_schedule: domain_volume must be positive");
  }
  std::vector<double> ab(steps), bb(steps);
  const double lo = DiffusionSchedule::kAlphaFloor;
  const double hi = 1.0 - DiffusionSchedule::kAlphaFloor;
  for (int t = 1; t <= steps; ++t) {
    double v;
    if (t == steps) {
      v = lo;
    } else if (shape == ScheduleShape::kLinear) {
      v = 1.0 - static_cast<double>(t) / steps;
    } else {
      const double c = std::cos(M_PI * t / (2.0 * steps));
      v = c * c;
    }
    ab[t - 1] = std::clamp(v, lo, hi);
  }
  // Clipping can flatten the ends of long cosine schedules; restore strict
  // decrease by nudging earlier steps up, keeping the terminal value at the
  // floor exactly.
  for (int t = steps - 1; t >= 1; --t) {
    if (ab[t - 1] <= ab[t]) ab[t - 1] = ab[t] + std::max(ab[t] * 1e-12, 1e-15);
  }
  for (int t = 1; t <= steps; ++t) bb[t - 1] = t == steps ? 1.0 : 1.0 - ab[t - 1];
  return DiffusionSchedule(std::move(ab), std::move(bb), expected_count / domain_volume);
}

PointSet sample_noise(const DiffusionSchedule& schedule, const DomainPtr& domain, Rng& rng) {
  if (!domain) throw UsageError("sample_noise: null domain");
  const double mean = schedule.noise_rate() * domain->normalized_volume();
  const long n = rng.poisson(mean);
  const int d = domain->dim();
  std::vector<double> flat(static_cast<std::size_t>(n) * d);
  for (double& v : flat) v = rng.uniform(-1.0, 1.0);
  return PointSet::from_normalized_flat(domain, flat);
}

LabeledState forward_step(const LabeledState& state, const DiffusionSchedule& schedule,
                          const DomainPtr& domain, Rng& rng) {
  const int t_next = state.t + 1;
  if (state.t < 0 || t_next > schedule.steps()) {
    throw UsageError("forward_step: step index out of range");
  }
  LabeledState next;
  next.t = t_next;
  ThinResult tr = thin(state.retained, schedule.alpha(t_next), rng);
  next.retained = std::move(tr.kept);
  next.retained_origin.reserve(tr.kept_indices.size());
  for (std::size_t k : tr.kept_indices) {
    next.retained_origin.push_back(state.retained_origin.empty() ? k : state.retained_origin[k]);
  }
  const double fresh_mean =
      schedule.beta(t_next) * schedule.noise_rate() * domain->normalized_volume();
  const long m = rng.poisson(fresh_mean);
  const int d = domain->dim();
  std::vector<double> flat(static_cast<std::size_t>(m) * d);
  for (double& v : flat) v = rng.uniform(-1.0, 1.0);
  next.noise = superpose(state.noise, PointSet::from_normalized_flat(domain, flat));
  return next;
}

LabeledState forward_marginal(const PointSet& x0, int t, const DiffusionSchedule& schedule,
                              Rng& rng) {
  if (t < 0 || t > schedule.steps()) throw UsageError("forward_marginal: t out of range");
  if (!x0.domain()) throw UsageError("forward_marginal: x0 has no domain");
  LabeledState s;
  s.t = t;
  ThinResult tr = thin(x0, schedule.alpha_bar(t), rng);
  s.retained = std::move(tr.kept);
  s.retained_origin = std::move(tr.kept_indices);
  const DomainPtr& domain = x0.domain();
  const double mean =
      schedule.beta_bar(t) * schedule.noise_rate() * domain->normalized_volume();
  const long m = rng.poisson(mean);
  const int d = domain->dim();
  std::vector<double> flat(static_cast<std::size_t>(m) * d);
  for (double& v : flat) v = rng.uniform(-1.0, 1.0);
  s.noise = PointSet::from_normalized_flat(domain, flat);
  return s;
}

}  // namespace ppdiff
