#pragma once

#include <string>
#include <vector>

#include "ppdiff/point_set.hpp"

namespace ppdiff {

enum class ScheduleShape { kLinear, kCosine };

ScheduleShape schedule_shape_from_string(const std::string& s);
std::string to_string(ScheduleShape s);

// Noising schedule of the latent chain. alpha_bar(t) is the marginal survival
// probability of a data point at step t; beta_bar(t) is the marginal inclusion
// probability of a noise candidate, with fresh noise added at step t at rate
// (beta_bar(t) - beta_bar(t-1)) * noise_rate per unit normalized volume.
//
// Conventions: alpha_bar(0) = 1 and beta_bar(0) = 0 exactly; alpha_bar is
// strictly decreasing with terminal value floored at 1e-4 instead of exact 0;
// beta_bar(T) = 1 exactly; beta_bar(t) = 1 - alpha_bar(t) for t < T, which
// keeps the expected total cardinality of the latent constant across t when
// noise_rate * normalized volume equals the expected data cardinality.
class DiffusionSchedule {
 public:
  DiffusionSchedule(std::vector<double> alpha_bar, std::vector<double> beta_bar,
                    double noise_rate);

  int steps() const { return static_cast<int>(alpha_bar_.size()); }
  double noise_rate() const { return noise_rate_; }

  double alpha_bar(int t) const;  // t in [0, T]
  double beta_bar(int t) const;   // t in [0, T]
  double alpha(int t) const;      // per-step survival, t in [1, T]
  double beta(int t) const;       // per-step noise increment, t in [1, T]

  const std::vector<double>& alpha_bar_all() const { return alpha_bar_; }
  const std::vector<double>& beta_bar_all() const { return beta_bar_; }

  static constexpr double kAlphaFloor = 1e-4;

 private:
  std::vector<double> alpha_bar_, beta_bar_;  // index t-1 holds step t
  double noise_rate_;
};

// Builds a schedule of the given shape. expected_count is the mean data
// cardinality the noise process is calibrated to; domain_volume is the
// normalized volume the resulting intensity is spread over.
DiffusionSchedule make_schedule(int steps, ScheduleShape shape, double expected_count,
                                double domain_volume);

// Draws from the stationary noise distribution: a homogeneous Poisson process
// with intensity noise_rate over the normalized box.
PointSet sample_noise(const DiffusionSchedule& schedule, const DomainPtr& domain, Rng& rng);

// One forward transition q(X_{t+1} | X_t): independent thinning of the
// retained part with survival alpha(t+1), union of fresh noise at rate
// beta(t+1) * noise_rate.
LabeledState forward_step(const LabeledState& state, const DiffusionSchedule& schedule,
                          const DomainPtr& domain, Rng& rng);

// Direct draw from the marginal q(X_t | X_0), t in [0, T]. retained_origin of
// the result indexes into x0.
LabeledState forward_marginal(const PointSet& x0, int t, const DiffusionSchedule& schedule,
                              Rng& rng);

}  // namespace ppdiff
