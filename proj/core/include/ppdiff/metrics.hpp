#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ppdiff/point_set.hpp"

namespace ppdiff {

enum class GroundMetric { kL1, kL2 };
enum class SetDistanceKind { kWasserstein, kCounting };

struct MetricReport {
  std::string metric;
  double value = 0.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  double bandwidth = 0.0;  // nonzero only for kernel statistics
  std::uint64_t seed = 0;
};

std::vector<long> cardinalities(const std::vector<PointSet>& sets);

// 1-Wasserstein between two empirical count distributions on the nonnegative
// integers: sum over k of |CDF_a(k) - CDF_b(k)|.
double sl_wasserstein(const std::vector<long>& counts_a, const std::vector<long>& counts_b);

// Mean absolute cardinality error over paired lists of equal length.
double count_mae(const std::vector<PointSet>& generated, const std::vector<PointSet>& truth);

// Order-based distance for domains with an ordered axis, on normalized
// coordinates. Both sets are sorted ascending by the ordered axis (ties broken
// lexicographically by the remaining coordinates); with Y the larger set,
//   (1/d) * sum_i ||x_i - y_i||_1  +  sum_{j>|X|} ||U - y_j||_1,
// where U is the normalized upper corner (all ones). The 1/d factor applies to
// the matched term only.
double counting_distance(const PointSet& x, const PointSet& y);

// Exact 1-Wasserstein between the uniform empirical measures of two nonempty
// point sets (normalized coordinates). Masses are scaled to the common
// denominator |X|*|Y| and the resulting integral transportation problem is
// solved exactly.
double ot_wasserstein(const PointSet& x, const PointSet& y,
                      GroundMetric ground = GroundMetric::kL2);

// Mean per-pair set distance over paired lists of equal length. For the
// Wasserstein kind, pairs with exactly one empty set use the normalized-box
// diameter as their distance (metric extension by an isolated point); two
// empty sets are at distance zero. The same extension applies inside mmd.
double mean_paired_distance(const std::vector<PointSet>& a, const std::vector<PointSet>& b,
                            SetDistanceKind kind, GroundMetric ground = GroundMetric::kL2);

struct MmdResult {
  double value = 0.0;
  double bandwidth = 0.0;
};

// Kernel maximum mean discrepancy between two lists of point sets with the
// Gaussian distance-substitution kernel k(X,Y) = exp(-d(X,Y)^2 / (2 sigma^2)),
// d being the chosen set distance. Biased V-statistic, square-rooted; sigma
// defaults to the median pairwise distance over the pooled lists (average of
// the two middle values on even counts). If the median is zero the smallest
// positive distance is used; if every pairwise distance is zero the result is
// {0, 0}. Pair distances may be computed by several workers; the result is
// independent of the worker count.
MmdResult mmd(const std::vector<PointSet>& a, const std::vector<PointSet>& b,
              SetDistanceKind kind, std::optional<double> bandwidth = std::nullopt,
              int workers = 1);

}  // namespace ppdiff
