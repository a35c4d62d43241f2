#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ppdiff/point_set.hpp"
#include "ppdiff/rng.hpp"

namespace ppdiff {

// Intensity in raw coordinates: expected points per unit raw volume.
using RateField = std::function<double(std::span<const double>)>;

PointSet gen_homogeneous_poisson(double rate, const DomainPtr& domain, Rng& rng);

// Thinning construction: homogeneous proposals at rate_max, kept with
// probability rate_field(x)/rate_max. Observed field values outside
// [0, rate_max] are an error.
PointSet gen_inhomogeneous_poisson(const RateField& rate_field, double rate_max,
                                   const DomainPtr& domain, Rng& rng);

// Self-exciting process on the ordered axis (exponential kernel, branching
// construction with a stationary warm-up window) with spatial marks: immigrant
// marks uniform, offspring marks Gaussian around the parent (clamped to the
// domain). Mean count over the window is mu * span / (1 - alpha_h/beta_h).
PointSet gen_hawkes_st(double mu, double alpha_h, double beta_h, double kernel_width,
                       const DomainPtr& domain, Rng& rng);

// Hawkes arrivals on the ordered axis; marks on the two remaining axes drawn
// from a K-armed pinwheel mixture, the arm inherited along each cascade.
PointSet gen_pinwheel_hawkes(int arms, double mu, double alpha_h, double beta_h,
                             const DomainPtr& domain, Rng& rng);

// Sum of isotropic Gaussian bumps (raw coordinates); a ready-made rate field
// for the thinning generator. Bump i contributes
// weight_i * exp(-||x - center_i||^2 / (2 width_i^2)).
RateField gaussian_bump_field(std::vector<std::vector<double>> centers,
                              std::vector<double> widths, std::vector<double> weights);

enum class SyntheticKind {
  kHomogeneousPoisson,
  kInhomogeneousPoisson,
  kHawkesSt,
  kPinwheelHawkes,
};

SyntheticKind synthetic_kind_from_string(const std::string& name);
std::string to_string(SyntheticKind kind);

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::kHomogeneousPoisson;
  double rate = 10.0;        // homogeneous
  RateField rate_field;      // inhomogeneous
  double rate_max = 0.0;     // inhomogeneous
  double mu = 1.0;           // hawkes / pinwheel
  double alpha_h = 0.5;
  double beta_h = 1.0;
  double kernel_width = 0.1;
  int arms = 5;              // pinwheel
  int num_instances = 1;
  std::uint64_t seed = 1;
};

// Instances use independent streams derived from (seed, instance index);
// output is independent of the worker count.
std::vector<PointSet> gen_dataset(const SyntheticSpec& spec, const DomainPtr& domain,
                                  int workers = 1);

}  // namespace ppdiff
