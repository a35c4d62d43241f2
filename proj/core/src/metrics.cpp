#include "ppdiff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "ppdiff/errors.hpp"
#include "ppdiff/transport.hpp"

namespace ppdiff {

namespace {

double l1_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
  return s;
}

double l2_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

// Sort order for the counting distance: ordered axis first, remaining
// coordinates lexicographically on ties.
std::vector<std::size_t> ordered_permutation(const PointSet& x, int axis) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const int d = x.dim();
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const auto pa = x.point(a);
    const auto pb = x.point(b);
    if (pa[axis] != pb[axis]) return pa[axis] < pb[axis];
    for (int k = 0; k < d; ++k) {
      if (k == axis) continue;
      if (pa[k] != pb[k]) return pa[k] < pb[k];
    }
    return false;
  });
  return idx;
}

double set_distance(const PointSet& a, const PointSet& b, SetDistanceKind kind,
                    GroundMetric ground) {
  if (kind == SetDistanceKind::kCounting) return counting_distance(a, b);
  if (!a.same_domain(b)) throw UsageError("set distance: domain mismatch");
  if (a.empty() || b.empty()) {
    // Metric extension: the empty set sits at the normalized-box diameter from
    // every nonempty set (and at zero from itself).
    if (a.empty() && b.empty()) return 0.0;
    const double d = static_cast<double>(a.dim());
    return ground == GroundMetric::kL1 ? 2.0 * d : 2.0 * std::sqrt(d);
  }
  return ot_wasserstein(a, b, ground);
}

}  // namespace

std::vector<long> cardinalities(const std::vector<PointSet>& sets) {
  std::vector<long> out;
  out.reserve(sets.size());
  for (const auto& s : sets) out.push_back(static_cast<long>(s.size()));
  return out;
}

double sl_wasserstein(const std::vector<long>& counts_a, const std::vector<long>& counts_b) {
  if (counts_a.empty() || counts_b.empty()) {
    throw UsageError("sl_wasserstein: empty count list");
  }
  long max_c = 0;
  for (long c : counts_a) {
    if (c < 0) throw UsageError("sl_wasserstein: negative count");
    max_c = std::max(max_c, c);
  }
  for (long c : counts_b) {
    if (c < 0) throw UsageError("sl_wasserstein: negative count");
    max_c = std::max(max_c, c);
  }
  std::vector<double> pa(static_cast<std::size_t>(max_c) + 1, 0.0), pb(pa.size(), 0.0);
  for (long c : counts_a) pa[static_cast<std::size_t>(c)] += 1.0 / counts_a.size();
  for (long c : counts_b) pb[static_cast<std::size_t>(c)] += 1.0 / counts_b.size();
  double dist = 0.0, fa = 0.0, fb = 0.0;
  for (std::size_t k = 0; k + 1 < pa.size(); ++k) {  // CDFs agree at and past max_c
    fa += pa[k];
    fb += pb[k];
    dist += std::abs(fa - fb);
  }
  return dist;
}

double count_mae(const std::vector<PointSet>& generated, const std::vector<PointSet>& truth) {
  if (generated.size() != truth.size() || generated.empty()) {
    throw UsageError("count_mae: lists must be nonempty and paired");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    s += std::abs(static_cast<double>(generated[i].size()) - static_cast<double>(truth[i].size()));
  }
  return s / static_cast<double>(generated.size());
}

double counting_distance(const PointSet& x, const PointSet& y) {
  if (!x.same_domain(y)) throw UsageError("counting_distance: domain mismatch");
  const auto& dom = *x.domain();
  if (!dom.ordered_axis().has_value()) {
    throw DomainError("counting_distance requires a domain with an ordered axis");
  }
  const int axis = *dom.ordered_axis();
  const int d = x.dim();

  const PointSet* small = &x;
  const PointSet* large = &y;
  if (small->size() > large->size()) std::swap(small, large);
  const auto ps = ordered_permutation(*small, axis);
  const auto pl = ordered_permutation(*large, axis);

  double matched = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    matched += l1_dist(small->point(ps[i]), large->point(pl[i]));
  }
  double penalty = 0.0;
  for (std::size_t j = ps.size(); j < pl.size(); ++j) {
    const auto p = large->point(pl[j]);
    for (int k = 0; k < d; ++k) penalty += std::abs(1.0 - p[k]);
  }
  return matched / d + penalty;
}

double ot_wasserstein(const PointSet& x, const PointSet& y, GroundMetric ground) {
  if (!x.same_domain(y)) throw UsageError("ot_wasserstein: domain mismatch");
  if (x.empty() || y.empty()) throw UsageError("ot_wasserstein: empty point set");
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(y.size());
  std::vector<double> cost(static_cast<std::size_t>(n) * m);
  for (int i = 0; i < n; ++i) {
    const auto xi = x.point(static_cast<std::size_t>(i));
    for (int j = 0; j < m; ++j) {
      const auto yj = y.point(static_cast<std::size_t>(j));
      cost[static_cast<std::size_t>(i) * m + j] =
          ground == GroundMetric::kL1 ? l1_dist(xi, yj) : l2_dist(xi, yj);
    }
  }
  // Scale both uniform measures to integer masses with total n*m.
  const std::vector<double> supply(static_cast<std::size_t>(n), static_cast<double>(m));
  const std::vector<double> demand(static_cast<std::size_t>(m), static_cast<double>(n));
  const double obj = transport_min_cost(n, m, cost, supply, demand);
  return obj / (static_cast<double>(n) * static_cast<double>(m));
}

double mean_paired_distance(const std::vector<PointSet>& a, const std::vector<PointSet>& b,
                            SetDistanceKind kind, GroundMetric ground) {
  if (a.size() != b.size() || a.empty()) {
    throw UsageError("mean_paired_distance: lists must be nonempty and paired");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += set_distance(a[i], b[i], kind, ground);
  return s / static_cast<double>(a.size());
}

MmdResult mmd(const std::vector<PointSet>& a, const std::vector<PointSet>& b,
              SetDistanceKind kind, std::optional<double> bandwidth, int workers) {
  if (a.empty() || b.empty()) throw UsageError("mmd: empty list of point sets");
  if (workers < 1) throw UsageError("mmd: workers must be >= 1");
  if (bandwidth && !(std::isfinite(*bandwidth) && *bandwidth > 0.0)) {
    throw UsageError("mmd: bandwidth must be positive");
  }

  std::vector<const PointSet*> pool;
  pool.reserve(a.size() + b.size());
  for (const auto& s : a) pool.push_back(&s);
  for (const auto& s : b) pool.push_back(&s);
  const std::size_t n = pool.size();

  // Each unordered pair once, mirrored into a full matrix. Pairs are split
  // into contiguous chunks per worker and written to disjoint slots, so the
  // matrix is identical for any worker count.
  std::vector<double> dist(n * n, 0.0);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  const auto fill = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      const auto [i, j] = pairs[p];
      const double dv = set_distance(*pool[i], *pool[j], kind, GroundMetric::kL2);
      dist[static_cast<std::size_t>(i) * n + j] = dv;
      dist[static_cast<std::size_t>(j) * n + i] = dv;
    }
  };
  const std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(workers),
                                                     std::max<std::size_t>(pairs.size(), 1));
  if (nthreads <= 1) {
    fill(0, pairs.size());
  } else {
    std::vector<std::thread> threads;
    threads.reserve(nthreads);
    const std::size_t chunk = (pairs.size() + nthreads - 1) / nthreads;
    for (std::size_t w = 0; w < nthreads; ++w) {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(pairs.size(), lo + chunk);
      if (lo >= hi) break;
      threads.emplace_back(fill, lo, hi);
    }
    for (auto& t : threads) t.join();
  }

  double sigma;
  if (bandwidth) {
    sigma = *bandwidth;
  } else {
    std::vector<double> off;
    off.reserve(pairs.size());
    for (const auto& [i, j] : pairs) off.push_back(dist[static_cast<std::size_t>(i) * n + j]);
    std::sort(off.begin(), off.end());
    const std::size_t mid = off.size() / 2;
    sigma = off.size() % 2 == 1 ? off[mid] : 0.5 * (off[mid - 1] + off[mid]);
    if (sigma <= 0.0) {
      const auto it = std::find_if(off.begin(), off.end(), [](double v) { return v > 0.0; });
      if (it == off.end()) return {0.0, 0.0};  // all pairwise distances zero
      sigma = *it;
    }
  }

  const double inv = -1.0 / (2.0 * sigma * sigma);
  const std::size_t na = a.size();
  const std::size_t nb = b.size();
  // Full-block sums in a fixed order (diagonal included): the V-statistic is
  // then exactly zero for identical lists.
  double s_aa = 0.0, s_bb = 0.0, s_ab = 0.0;
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < na; ++j) {
      const double dv = dist[i * n + j];
      s_aa += std::exp(inv * dv * dv);
    }
  }
  for (std::size_t i = 0; i < nb; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      const double dv = dist[(na + i) * n + (na + j)];
      s_bb += std::exp(inv * dv * dv);
    }
  }
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      const double dv = dist[i * n + (na + j)];
      s_ab += std::exp(inv * dv * dv);
    }
  }
  const double mean_aa = s_aa / (static_cast<double>(na) * static_cast<double>(na));
  const double mean_bb = s_bb / (static_cast<double>(nb) * static_cast<double>(nb));
  const double mean_ab = s_ab / (static_cast<double>(na) * static_cast<double>(nb));
  const double sq = mean_aa + mean_bb - 2.0 * mean_ab;
  return {std::sqrt(std::max(0.0, sq)), sigma};
}

}  // namespace ppdiff
