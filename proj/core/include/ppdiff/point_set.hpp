#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ppdiff/domain.hpp"
#include "ppdiff/rng.hpp"

namespace ppdiff {

// Finite simple point configuration on a Domain. Each point is stored in both
// raw units (authoritative, what file IO reads and writes) and normalized
// [-1,1]^d units (what every numeric consumer uses); the normalized view is
// always exactly normalize(raw), so save/load round-trips are bitwise stable.
//
// Simplicity: construction rejects bitwise-duplicate raw coordinates. Set
// arithmetic (thinning, differences) is index-based and never compares
// coordinates, so numerically close points cannot be conflated.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(DomainPtr domain);  // empty set

  // Points given in raw units; must lie inside the domain box.
  static PointSet from_raw(DomainPtr domain, const std::vector<std::vector<double>>& pts);
  static PointSet from_raw_flat(DomainPtr domain, std::vector<double> flat);
  // Points given in normalized units in [-1,1]^d; canonicalized so that the
  // stored normalized value equals normalize(denormalize(value)) exactly.
  static PointSet from_normalized_flat(DomainPtr domain, const std::vector<double>& flat);

  const DomainPtr& domain() const { return domain_; }
  int dim() const { return domain_ ? domain_->dim() : 0; }
  std::size_t size() const;
  bool empty() const { return size() == 0; }

  // Normalized coordinates of point i.
  std::span<const double> point(std::size_t i) const;
  // Raw coordinates of point i.
  std::span<const double> raw_point(std::size_t i) const;
  const std::vector<double>& norm_flat() const { return norm_; }
  const std::vector<double>& raw_flat() const { return raw_; }

  // New set containing points at the given indices, in the given order.
  PointSet subset(const std::vector<std::size_t>& indices) const;

  bool same_domain(const PointSet& other) const;

 private:
  void check_and_index();

  DomainPtr domain_;
  std::vector<double> raw_, norm_;
};

// |{x in X : C(x) = 1}| for an arbitrary indicator over normalized coords.
template <typename Indicator>
std::size_t count_if(const PointSet& x, Indicator&& c) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (c(x.point(i))) ++n;
  }
  return n;
}

// Union of two disjoint configurations on the same domain (points of a first,
// then points of b). Throws on domain mismatch or bitwise-coincident points.
PointSet superpose(const PointSet& a, const PointSet& b);

// Independent Bernoulli(keep_prob) thinning. Returns the surviving subset and
// the indices of survivors in the input order.
struct ThinResult {
  PointSet kept;
  std::vector<std::size_t> kept_indices;
};
ThinResult thin(const PointSet& x, double keep_prob, Rng& rng);

// Latent state of the noising chain at step t: the surviving data points and
// the accumulated noise points, kept separate. retained_origin[i] is the index
// of retained point i in the data set the state was built from, which keeps
// reverse-process set algebra exact.
struct LabeledState {
  PointSet retained;
  std::vector<std::size_t> retained_origin;
  PointSet noise;
  int t = 0;

  PointSet full() const { return superpose(retained, noise); }
  std::size_t total_count() const { return retained.size() + noise.size(); }
};

}  // namespace ppdiff
