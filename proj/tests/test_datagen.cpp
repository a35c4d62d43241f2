#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <vector>

#include "doctest.h"
#include "ppdiff/datagen.hpp"
#include "ppdiff/errors.hpp"
#include "support.hpp"

using namespace ppdiff;

namespace {

DomainPtr make_box(std::vector<double> lo, std::vector<double> hi,
                   std::optional<int> ordered = std::nullopt) {
  return std::make_shared<Domain>(std::move(lo), std::move(hi), ordered);
}

// Integral over [0,1] of exp(-(x-c)^2 / (2 s^2)).
double gauss_axis_mass(double c, double s) {
  const double r = std::sqrt(2.0) * s;
  return s * std::sqrt(M_PI / 2.0) * (std::erf((1.0 - c) / r) - std::erf((0.0 - c) / r));
}

bool same_bits(const PointSet& a, const PointSet& b) {
  return a.size() == b.size() &&
         (a.size() == 0 || std::memcmp(a.raw_flat().data(), b.raw_flat().data(),
                                       a.raw_flat().size() * sizeof(double)) == 0);
}

}  // namespace

TEST_SUITE_BEGIN("datagen");

TEST_CASE("homogeneous counts are Poisson and coordinates uniform") {
  auto dom = make_box({0.0, 0.0}, {2.0, 0.5});  // raw volume 1
  Rng rng(71);
  const double rate = 6.0;
  const int reps = 3000;
  std::vector<long> counts;
  std::vector<long> bucket_x(10, 0), bucket_y(10, 0);
  long total_points = 0;
  for (int r = 0; r < reps; ++r) {
    PointSet x = gen_homogeneous_poisson(rate, dom, rng);
    counts.push_back(static_cast<long>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto p = x.raw_point(i);
      CHECK(p[0] >= 0.0);
      CHECK(p[0] <= 2.0);
      ++bucket_x[std::min<std::size_t>(9, static_cast<std::size_t>(p[0] / 0.2))];
      ++bucket_y[std::min<std::size_t>(9, static_cast<std::size_t>(p[1] / 0.05))];
      ++total_points;
    }
  }
  // Count distribution vs Poisson(6).
  const auto probs = tsup::poisson_probs_with_tail(6.0, 18);
  std::vector<long> hist(probs.size(), 0);
  for (long c : counts) ++hist[std::min<std::size_t>(static_cast<std::size_t>(c), 18)];
  CHECK(tsup::chi2_gof_pvalue(hist, probs) > 1e-3);
  // Uniform marginals on both axes.
  const std::vector<double> uniform(10, 0.1);
  CHECK(tsup::chi2_gof_pvalue(bucket_x, uniform) > 1e-3);
  CHECK(tsup::chi2_gof_pvalue(bucket_y, uniform) > 1e-3);
  CHECK(total_points > reps * 5);
  CHECK(gen_homogeneous_poisson(0.0, dom, rng).size() == 0);
  CHECK_THROWS_AS(gen_homogeneous_poisson(-1.0, dom, rng), UsageError);
}

TEST_CASE("thinning generator respects a step field") {
  auto dom = make_box({0.0, 0.0}, {1.0, 1.0});
  const RateField step = [](std::span<const double> x) { return x[0] < 0.5 ? 20.0 : 0.0; };
  Rng rng(73);
  const int reps = 3000;
  std::vector<long> counts;
  for (int r = 0; r < reps; ++r) {
    PointSet x = gen_inhomogeneous_poisson(step, 20.0, dom, rng);
    counts.push_back(static_cast<long>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(x.raw_point(i)[0] < 0.5);
  }
  // Kept process is Poisson(20 * 0.5) = Poisson(10).
  const auto probs = tsup::poisson_probs_with_tail(10.0, 24);
  std::vector<long> hist(probs.size(), 0);
  for (long c : counts) ++hist[std::min<std::size_t>(static_cast<std::size_t>(c), 24)];
  CHECK(tsup::chi2_gof_pvalue(hist, probs) > 1e-3);
}

TEST_CASE("gaussian bump field values and integral") {
  auto field = gaussian_bump_field({{0.25, 0.25}, {0.75, 0.75}}, {0.1, 0.2}, {40.0, 10.0});
  const std::vector<double> at_first = {0.25, 0.25};
  // Second bump contributes its tail at the first center.
  const double cross = 10.0 * std::exp(-(0.25 + 0.25) / (2.0 * 0.04));
  CHECK(field(at_first) == doctest::Approx(40.0 + cross).epsilon(1e-12));
  const std::vector<double> shifted = {0.35, 0.25};
  CHECK(field(shifted) >= 40.0 * std::exp(-0.5));  // one width away from bump 1
  CHECK_THROWS_AS(gaussian_bump_field({}, {}, {}), UsageError);
  CHECK_THROWS_AS(gaussian_bump_field({{0.5}}, {0.0}, {1.0}), UsageError);
  CHECK_THROWS_AS(gaussian_bump_field({{0.5}, {0.1, 0.2}}, {0.1, 0.1}, {1.0, 1.0}), UsageError);

  // Thinned samples hit the exact bump-field integral over the box.
  auto dom = make_box({0.0, 0.0}, {1.0, 1.0});
  auto bumps = gaussian_bump_field({{0.25, 0.25}, {0.75, 0.75}}, {0.1, 0.1}, {40.0, 40.0});
  const double expect = 40.0 * gauss_axis_mass(0.25, 0.1) * gauss_axis_mass(0.25, 0.1) +
                        40.0 * gauss_axis_mass(0.75, 0.1) * gauss_axis_mass(0.75, 0.1);
  Rng rng(79);
  const int reps = 1500;
  std::vector<double> counts(reps);
  for (int r = 0; r < reps; ++r) {
    counts[static_cast<std::size_t>(r)] =
        static_cast<double>(gen_inhomogeneous_poisson(bumps, 81.0, dom, rng).size());
  }
  const auto ms = tsup::mean_se(counts);
  CHECK_MESSAGE(std::fabs(ms.mean - expect) <= 3.0 * ms.se, "mean ", ms.mean, " expect ", expect);
}

TEST_CASE("thinning generator rejects out-of-range field values") {
  auto dom = make_box({0.0}, {1.0});
  Rng rng(83);
  const RateField over = [](std::span<const double>) { return 100.0; };
  CHECK_THROWS_AS(gen_inhomogeneous_poisson(over, 50.0, dom, rng), UsageError);
  const RateField negative = [](std::span<const double>) { return -1.0; };
  CHECK_THROWS_AS(gen_inhomogeneous_poisson(negative, 50.0, dom, rng), UsageError);
  CHECK_THROWS_AS(gen_inhomogeneous_poisson(RateField{}, 50.0, dom, rng), UsageError);
  CHECK_THROWS_AS(gen_inhomogeneous_poisson(over, -1.0, dom, rng), UsageError);
}

TEST_CASE("hawkes window count matches the stationary mean") {
  auto dom = make_box({0.0, -1.0}, {5.0, 1.0}, 0);
  Rng rng(89);
  const double mu = 2.0, alpha = 0.5, beta = 1.0;
  const double expect = mu * 5.0 / (1.0 - alpha / beta);  // 20
  const int reps = 1200;
  std::vector<double> counts(reps);
  for (int r = 0; r < reps; ++r) {
    PointSet x = gen_hawkes_st(mu, alpha, beta, 0.1, dom, rng);
    counts[static_cast<std::size_t>(r)] = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(x.raw_point(i)[0] >= 0.0);
      CHECK(x.raw_point(i)[0] <= 5.0);
      CHECK(std::fabs(x.raw_point(i)[1]) <= 1.0);
    }
  }
  const auto ms = tsup::mean_se(counts);
  CHECK_MESSAGE(std::fabs(ms.mean - expect) <= 3.0 * ms.se, "mean ", ms.mean, " se ", ms.se);
  // Self-excitation makes counts overdispersed relative to Poisson.
  double var = 0.0;
  for (double c : counts) var += (c - ms.mean) * (c - ms.mean);
  var /= reps - 1;
  CHECK(var > 1.5 * ms.mean);
}

TEST_CASE("hawkes with no excitation is exactly Poisson") {
  auto dom = make_box({0.0, -1.0}, {2.0, 1.0}, 0);
  Rng rng(97);
  const int reps = 3000;
  std::vector<long> hist(tsup::poisson_probs_with_tail(6.0, 18).size(), 0);
  for (int r = 0; r < reps; ++r) {
    const std::size_t c = gen_hawkes_st(3.0, 0.0, 1.0, 0.1, dom, rng).size();
    ++hist[std::min<std::size_t>(c, 18)];
  }
  CHECK(tsup::chi2_gof_pvalue(hist, tsup::poisson_probs_with_tail(6.0, 18)) > 1e-3);
}

TEST_CASE("hawkes offspring cluster near their parents") {
  auto dom = make_box({0.0, 0.0}, {50.0, 1.0}, 0);
  Rng wide_rng(101), narrow_rng(101);
  // Same seed: identical cascades, different kernel widths. The narrow-kernel
  // process has more tightly clustered consecutive marks.
  PointSet wide = gen_hawkes_st(1.0, 0.7, 1.0, 0.5, dom, wide_rng);
  PointSet narrow = gen_hawkes_st(1.0, 0.7, 1.0, 0.01, dom, narrow_rng);
  REQUIRE(wide.size() > 20);
  REQUIRE(narrow.size() > 20);
  const auto mean_gap = [](const PointSet& x) {
    // Points arrive cascade-ordered, not time-ordered; sort by time first.
    std::vector<std::pair<double, double>> tm;
    for (std::size_t i = 0; i < x.size(); ++i) {
      tm.emplace_back(x.raw_point(i)[0], x.raw_point(i)[1]);
    }
    std::sort(tm.begin(), tm.end());
    double s = 0.0;
    for (std::size_t i = 1; i < tm.size(); ++i) s += std::fabs(tm[i].second - tm[i - 1].second);
    return s / static_cast<double>(tm.size() - 1);
  };
  CHECK(mean_gap(narrow) < mean_gap(wide));
}

TEST_CASE("hawkes parameter validation") {
  auto dom = make_box({0.0, -1.0}, {2.0, 1.0}, 0);
  auto unordered = make_box({0.0, -1.0}, {2.0, 1.0});
  Rng rng(103);
  CHECK_THROWS_AS(gen_hawkes_st(1.0, 1.0, 1.0, 0.1, dom, rng), UsageError);   // ratio = 1
  CHECK_THROWS_AS(gen_hawkes_st(1.0, 2.0, 1.0, 0.1, dom, rng), UsageError);   // ratio > 1
  CHECK_THROWS_AS(gen_hawkes_st(-1.0, 0.5, 1.0, 0.1, dom, rng), UsageError);  // mu < 0
  CHECK_THROWS_AS(gen_hawkes_st(1.0, 0.5, 0.0, 0.1, dom, rng), UsageError);   // beta = 0
  CHECK_THROWS_AS(gen_hawkes_st(1.0, 0.5, 1.0, -0.1, dom, rng), UsageError);  // width < 0
  CHECK_THROWS_AS(gen_hawkes_st(1.0, 0.5, 1.0, 0.1, unordered, rng), DomainError);
  CHECK(gen_hawkes_st(0.0, 0.5, 1.0, 0.1, dom, rng).size() == 0);  // no immigrants at all
}

TEST_CASE("hawkes event budget aborts runaway cascades") {
  auto dom = make_box({0.0, -1.0}, {1.0, 1.0}, 0);
  Rng rng(107);
  CHECK_THROWS_AS(gen_hawkes_st(1e7, 0.0, 1.0, 0.1, dom, rng), NumericError);
  CHECK_THROWS_AS(gen_hawkes_st(1e7, 0.9, 1.0, 0.1, dom, rng), NumericError);
}

TEST_CASE("pinwheel marks form arms in the spatial plane") {
  auto dom = make_box({0.0, -1.0, -1.0}, {4.0, 1.0, 1.0}, 0);
  Rng rng(109);
  const double mu = 3.0, alpha = 0.4, beta = 2.0;
  const double expect = mu * 4.0 / (1.0 - alpha / beta);  // 15
  const int reps = 400;
  std::vector<double> counts(reps), radii;
  for (int r = 0; r < reps; ++r) {
    PointSet x = gen_pinwheel_hawkes(3, mu, alpha, beta, dom, rng);
    counts[static_cast<std::size_t>(r)] = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto p = x.point(i);  // normalized
      CHECK(x.raw_point(i)[0] >= 0.0);
      CHECK(x.raw_point(i)[0] <= 4.0);
      radii.push_back(std::hypot(p[1], p[2]));
    }
  }
  const auto ms = tsup::mean_se(counts);
  CHECK_MESSAGE(std::fabs(ms.mean - expect) <= 3.0 * ms.se, "mean ", ms.mean, " se ", ms.se);
  // Marks live near radius 1/2.5 = 0.4 of the normalized plane, not uniform.
  REQUIRE(radii.size() > 1000);
  const auto mr = tsup::mean_se(radii);
  CHECK(std::fabs(mr.mean - 0.4) < 0.1);
  CHECK_THROWS_AS(gen_pinwheel_hawkes(0, mu, alpha, beta, dom, rng), UsageError);
  auto flat = make_box({0.0, -1.0}, {4.0, 1.0}, 0);
  CHECK_THROWS_AS(gen_pinwheel_hawkes(3, mu, alpha, beta, flat, rng), UsageError);
}

TEST_CASE("dataset generation is worker-independent and seed-keyed") {
  auto dom = make_box({0.0, -1.0}, {3.0, 1.0}, 0);
  SyntheticSpec spec;
  spec.kind = SyntheticKind::kHawkesSt;
  spec.mu = 2.0;
  spec.alpha_h = 0.3;
  spec.beta_h = 1.0;
  spec.kernel_width = 0.2;
  spec.num_instances = 8;
  spec.seed = 77;
  const auto solo = gen_dataset(spec, dom, 1);
  const auto multi = gen_dataset(spec, dom, 4);
  REQUIRE(solo.size() == 8);
  REQUIRE(multi.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) CHECK(same_bits(solo[i], multi[i]));
  // Instances differ from one another and react to the seed.
  CHECK_FALSE(same_bits(solo[0], solo[1]));
  SyntheticSpec other = spec;
  other.seed = 78;
  CHECK_FALSE(same_bits(gen_dataset(other, dom, 1)[0], solo[0]));
  SyntheticSpec bad = spec;
  bad.num_instances = 0;
  CHECK_THROWS_AS(gen_dataset(bad, dom, 1), UsageError);
}

TEST_CASE("synthetic kind names round trip") {
  using K = SyntheticKind;
  for (K k : {K::kHomogeneousPoisson, K::kInhomogeneousPoisson, K::kHawkesSt, K::kPinwheelHawkes}) {
    CHECK(synthetic_kind_from_string(to_string(k)) == k);
  }
  CHECK(to_string(K::kHomogeneousPoisson) == "homogeneous_poisson");
  CHECK(to_string(K::kPinwheelHawkes) == "pinwheel_hawkes");
  CHECK_THROWS_AS(synthetic_kind_from_string("gaussian"), UsageError);
}

TEST_SUITE_END();
