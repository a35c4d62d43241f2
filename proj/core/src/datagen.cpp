#include "ppdiff/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ppdiff/errors.hpp"
#include "ppdiff/parallel.hpp"

namespace ppdiff {

namespace {

constexpr std::uint64_t kDatagenStream = 0x67656e64ULL;
constexpr std::size_t kEventBudget = 2'000'000;

double exp_draw(Rng& rng, double beta) { return -std::log(1.0 - rng.uniform()) / beta; }

std::vector<int> spatial_axes(const Domain& dom, int ordered) {
  std::vector<int> axes;
  for (int k = 0; k < dom.dim(); ++k) {
    if (k != ordered) axes.push_back(k);
  }
  return axes;
}

struct HawkesParams {
  double mu, alpha_h, beta_h;
  int time_axis;
  double t_lo, t_hi;
};

HawkesParams check_hawkes(double mu, double alpha_h, double beta_h, const DomainPtr& domain) {
  if (!domain || !domain->ordered_axis().has_value()) {
    throw DomainError("hawkes generator requires a domain with an ordered axis");
  }
  if (!(mu >= 0.0) || !std::isfinite(mu) || !(alpha_h >= 0.0) || !(beta_h > 0.0)) {
    throw UsageError("hawkes generator: mu, alpha_h >= 0 and beta_h > 0 required");
  }
  if (!(alpha_h / beta_h < 1.0)) {
    throw UsageError("hawkes generator is unstable: alpha_h/beta_h must be < 1");
  }
  const int axis = *domain->ordered_axis();
  return {mu, alpha_h, beta_h, axis, domain->lower()[axis], domain->upper()[axis]};
}

// Branching construction with a warm-up window long enough that the count in
// the observation window matches the stationary mean mu*span/(1-alpha/beta).
// make_mark draws the non-time coordinates of a new event; parent is null for
// immigrants.
template <typename MakeMark>
PointSet hawkes_cascade(const HawkesParams& hp, const DomainPtr& domain, Rng& rng,
                        MakeMark&& make_mark) {
  const int d = domain->dim();
  std::vector<std::vector<double>> events;  // queue; index-order processing
  std::vector<int> arm;                     // pinwheel arm per event (unused otherwise)
  const double ratio = hp.alpha_h / hp.beta_h;
  const double burn = hp.alpha_h > 0.0 ? 40.0 / (hp.beta_h * (1.0 - ratio)) : 0.0;
  if (hp.mu > 0.0) {
    const long n_imm = rng.poisson(hp.mu * (hp.t_hi - hp.t_lo + burn));
    if (n_imm > static_cast<long>(kEventBudget)) {
      throw NumericError("hawkes cascade exceeded the event budget");
    }
    for (long i = 0; i < n_imm; ++i) {
      std::vector<double> pt(static_cast<std::size_t>(d));
      pt[hp.time_axis] = rng.uniform(hp.t_lo - burn, hp.t_hi);
      arm.push_back(-1);
      make_mark(pt, nullptr, arm.back(), rng);
      events.push_back(std::move(pt));
    }
  }
  for (std::size_t head = 0; head < events.size(); ++head) {
    if (events.size() > kEventBudget) {
      throw NumericError("hawkes cascade exceeded the event budget");
    }
    const double parent_t = events[head][hp.time_axis];
    const long n_children = rng.poisson(ratio);
    for (long c = 0; c < n_children; ++c) {
      const double t = parent_t + exp_draw(rng, hp.beta_h);
      if (t > hp.t_hi) continue;
      std::vector<double> pt(static_cast<std::size_t>(d));
      pt[hp.time_axis] = t;
      arm.push_back(arm[head]);
      make_mark(pt, &events[head], arm.back(), rng);
      events.push_back(std::move(pt));
    }
  }
  std::vector<std::vector<double>> kept;
  for (const auto& pt : events) {
    const double t = pt[hp.time_axis];
    if (t >= hp.t_lo && t <= hp.t_hi) kept.push_back(pt);
  }
  return PointSet::from_raw(domain, kept);
}

}  // namespace

PointSet gen_homogeneous_poisson(double rate, const DomainPtr& domain, Rng& rng) {
  if (!domain) throw UsageError("gen_homogeneous_poisson: null domain");
  if (!(rate >= 0.0) || !std::isfinite(rate)) {
    throw UsageError("gen_homogeneous_poisson: rate must be finite and >= 0");
  }
  const long n = rng.poisson(rate * domain->raw_volume());
  const int d = domain->dim();
  std::vector<double> flat(static_cast<std::size_t>(n) * d);
  for (long i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) {
      flat[static_cast<std::size_t>(i) * d + k] =
          rng.uniform(domain->lower()[k], domain->upper()[k]);
    }
  }
  return PointSet::from_raw_flat(domain, std::move(flat));
}

PointSet gen_inhomogeneous_poisson(const RateField& rate_field, double rate_max,
                                   const DomainPtr& domain, Rng& rng) {
  if (!rate_field) throw UsageError("gen_inhomogeneous_poisson: rate_field not set");
  if (!(rate_max >= 0.0) || !std::isfinite(rate_max)) {
    throw UsageError("gen_inhomogeneous_poisson: rate_max must be finite and >= 0");
  }
  const PointSet proposals = gen_homogeneous_poisson(rate_max, domain, rng);
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    const double v = rate_field(proposals.raw_point(i));
    if (!(v >= 0.0) || v > rate_max) {
      throw UsageError("gen_inhomogeneous_poisson: rate_field value " + std::to_string(v) +
                       " outside [0, rate_max]");
    }
    if (rng.bernoulli(v / rate_max)) kept.push_back(i);
  }
  return proposals.subset(kept);
}

PointSet gen_hawkes_st(double mu, double alpha_h, double beta_h, double kernel_width,
                       const DomainPtr& domain, Rng& rng) {
  const HawkesParams hp = check_hawkes(mu, alpha_h, beta_h, domain);
  if (!(kernel_width >= 0.0) || !std::isfinite(kernel_width)) {
    throw UsageError("gen_hawkes_st: kernel_width must be finite and >= 0");
  }
  const std::vector<int> marks = spatial_axes(*domain, hp.time_axis);
  return hawkes_cascade(hp, domain, rng,
                        [&](std::vector<double>& pt, const std::vector<double>* parent, int,
                            Rng& r) {
                          for (int k : marks) {
                            if (parent == nullptr) {
                              pt[k] = r.uniform(domain->lower()[k], domain->upper()[k]);
                            } else {
                              pt[k] = std::clamp((*parent)[k] + kernel_width * r.normal(),
                                                 domain->lower()[k], domain->upper()[k]);
                            }
                          }
                        });
}

PointSet gen_pinwheel_hawkes(int arms, double mu, double alpha_h, double beta_h,
                             const DomainPtr& domain, Rng& rng) {
  const HawkesParams hp = check_hawkes(mu, alpha_h, beta_h, domain);
  if (arms < 1) throw UsageError("gen_pinwheel_hawkes: arms must be >= 1");
  const std::vector<int> marks = spatial_axes(*domain, hp.time_axis);
  if (marks.size() != 2) {
    throw UsageError("gen_pinwheel_hawkes: domain needs exactly two spatial axes");
  }
  // Classic pinwheel mixture: radial std 0.3 about radius 1, tangential std
  // 0.1, swirl rate 0.25; the plane is scaled by 1/2.5 into normalized
  // coordinates and clamped.
  return hawkes_cascade(
      hp, domain, rng,
      [&](std::vector<double>& pt, const std::vector<double>* parent, int& arm_label, Rng& r) {
        if (parent == nullptr) arm_label = static_cast<int>(r.uniform_int(arms));
        const double f0 = 1.0 + 0.3 * r.normal();
        const double f1 = 0.1 * r.normal();
        const double theta =
            2.0 * std::numbers::pi * arm_label / arms + 0.25 * std::exp(f0);
        const double px = f0 * std::cos(theta) - f1 * std::sin(theta);
        const double py = f0 * std::sin(theta) + f1 * std::cos(theta);
        pt[marks[0]] = domain->denormalize(std::clamp(px / 2.5, -1.0, 1.0), marks[0]);
        pt[marks[1]] = domain->denormalize(std::clamp(py / 2.5, -1.0, 1.0), marks[1]);
      });
}

RateField gaussian_bump_field(std::vector<std::vector<double>> centers,
                              std::vector<double> widths, std::vector<double> weights) {
  if (centers.empty() || centers.size() != widths.size() || centers.size() != weights.size()) {
    throw UsageError("gaussian_bump_field: centers, widths, weights must be same-length");
  }
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (!(widths[i] > 0.0) || !(weights[i] >= 0.0)) {
      throw UsageError("gaussian_bump_field: widths must be > 0 and weights >= 0");
    }
    if (centers[i].size() != centers[0].size()) {
      throw UsageError("gaussian_bump_field: inconsistent center dimensions");
    }
  }
  return [centers = std::move(centers), widths = std::move(widths),
          weights = std::move(weights)](std::span<const double> x) {
    double v = 0.0;
    for (std::size_t i = 0; i < centers.size(); ++i) {
      double q = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double dxk = x[k] - centers[i][k];
        q += dxk * dxk;
      }
      v += weights[i] * std::exp(-q / (2.0 * widths[i] * widths[i]));
    }
    return v;
  };
}

SyntheticKind synthetic_kind_from_string(const std::string& name) {
  if (name == "homogeneous_poisson") return SyntheticKind::kHomogeneousPoisson;
  if (name == "inhomogeneous_poisson") return SyntheticKind::kInhomogeneousPoisson;
  if (name == "hawkes_st") return SyntheticKind::kHawkesSt;
  if (name == "pinwheel_hawkes") return SyntheticKind::kPinwheelHawkes;
  throw UsageError("unknown synthetic kind: " + name);
}

std::string to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::kHomogeneousPoisson: return "homogeneous_poisson";
    case SyntheticKind::kInhomogeneousPoisson: return "inhomogeneous_poisson";
    case SyntheticKind::kHawkesSt: return "hawkes_st";
    case SyntheticKind::kPinwheelHawkes: return "pinwheel_hawkes";
  }
  throw UsageError("unknown synthetic kind");
}

std::vector<PointSet> gen_dataset(const SyntheticSpec& spec, const DomainPtr& domain,
                                  int workers) {
  if (spec.num_instances < 1) throw UsageError("gen_dataset: num_instances must be >= 1");
  std::vector<PointSet> out(static_cast<std::size_t>(spec.num_instances));
  parallel_for(out.size(), workers, [&](std::size_t i) {
    Rng rng = Rng::derive(spec.seed, {kDatagenStream, static_cast<std::uint64_t>(i)});
    switch (spec.kind) {
      case SyntheticKind::kHomogeneousPoisson:
        out[i] = gen_homogeneous_poisson(spec.rate, domain, rng);
        break;
      case SyntheticKind::kInhomogeneousPoisson:
        out[i] = gen_inhomogeneous_poisson(spec.rate_field, spec.rate_max, domain, rng);
        break;
      case SyntheticKind::kHawkesSt:
        out[i] = gen_hawkes_st(spec.mu, spec.alpha_h, spec.beta_h, spec.kernel_width, domain, rng);
        break;
      case SyntheticKind::kPinwheelHawkes:
        out[i] = gen_pinwheel_hawkes(spec.arms, spec.mu, spec.alpha_h, spec.beta_h, domain, rng);
        break;
    }
  });
  return out;
}

}  // namespace ppdiff
