#include "ppdiff/point_set.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "ppdiff/errors.hpp"

namespace ppdiff {

PointSet::PointSet(DomainPtr domain) : domain_(std::move(domain)) {
  if (!domain_) throw UsageError("PointSet: null domain");
}

std::size_t PointSet::size() const {
  return domain_ ? raw_.size() / domain_->dim() : 0;
}

std::span<const double> PointSet::point(std::size_t i) const {
  const int d = dim();
  return {norm_.data() + i * d, static_cast<std::size_t>(d)};
}

std::span<const double> PointSet::raw_point(std::size_t i) const {
  const int d = dim();
  return {raw_.data() + i * d, static_cast<std::size_t>(d)};
}

void PointSet::check_and_index() {
  const int d = domain_->dim();
  const std::size_t n = raw_.size() / d;
  for (std::size_t i = 0; i < n * d; ++i) {
    if (!std::isfinite(raw_[i])) throw UsageError("PointSet: non-finite coordinate");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!domain_->contains_raw(raw_.data() + i * d)) {
      throw UsageError("PointSet: point outside domain box");
    }
  }
  // Reject bitwise duplicates (sort a permutation by raw bytes, compare
  // neighbours). -0.0 and 0.0 are distinct under this test by design.
  if (n > 1) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto* base = raw_.data();
    const std::size_t bytes = static_cast<std::size_t>(d) * sizeof(double);
    auto cmp = [&](std::size_t a, std::size_t b) {
      return std::memcmp(base + a * d, base + b * d, bytes) < 0;
    };
    std::sort(order.begin(), order.end(), cmp);
    for (std::size_t i = 1; i < n; ++i) {
      if (std::memcmp(base + order[i - 1] * d, base + order[i] * d, bytes) == 0) {
        throw UsageError("PointSet: duplicate point rejected (sets must be simple)");
      }
    }
  }
}

PointSet PointSet::from_raw(DomainPtr domain, const std::vector<std::vector<double>>& pts) {
  if (!domain) throw UsageError("PointSet: null domain");
  std::vector<double> flat;
  flat.reserve(pts.size() * domain->dim());
  for (const auto& p : pts) {
    if (static_cast<int>(p.size()) != domain->dim()) {
      throw UsageError("PointSet: point dimension does not match domain");
    }
    flat.insert(flat.end(), p.begin(), p.end());
  }
  return from_raw_flat(std::move(domain), std::move(flat));
}

PointSet PointSet::from_raw_flat(DomainPtr domain, std::vector<double> flat) {
  if (!domain) throw UsageError("PointSet: null domain");
  const int d = domain->dim();
  if (flat.size() % d != 0) throw UsageError("PointSet: flat size not a multiple of dim");
  PointSet ps(std::move(domain));
  ps.raw_ = std::move(flat);
  ps.norm_.resize(ps.raw_.size());
  const std::size_t n = ps.raw_.size() / d;
  for (std::size_t i = 0; i < n; ++i) {
    ps.domain_->normalize_point(ps.raw_.data() + i * d, ps.norm_.data() + i * d);
  }
  ps.check_and_index();
  return ps;
}

PointSet PointSet::from_normalized_flat(DomainPtr domain, const std::vector<double>& flat) {
  if (!domain) throw UsageError("PointSet: null domain");
  const int d = domain->dim();
  if (flat.size() % d != 0) throw UsageError("PointSet: flat size not a multiple of dim");
  std::vector<double> raw(flat.size());
  const std::size_t n = flat.size() / d;
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < d; ++a) {
      const double v = flat[i * d + a];
      if (!(v >= -1.0 && v <= 1.0)) {
        throw UsageError("PointSet: normalized coordinate outside [-1, 1]");
      }
      raw[i * d + a] = domain->denormalize(v, a);
    }
  }
  return from_raw_flat(std::move(domain), std::move(raw));
}

PointSet PointSet::subset(const std::vector<std::size_t>& indices) const {
  PointSet out(domain_);
  const int d = dim();
  out.raw_.reserve(indices.size() * d);
  out.norm_.reserve(indices.size() * d);
  const std::size_t n = size();
  for (std::size_t idx : indices) {
    if (idx >= n) throw UsageError("PointSet::subset: index out of range");
    out.raw_.insert(out.raw_.end(), raw_.begin() + idx * d, raw_.begin() + (idx + 1) * d);
    out.norm_.insert(out.norm_.end(), norm_.begin() + idx * d, norm_.begin() + (idx + 1) * d);
  }
  return out;
}

bool PointSet::same_domain(const PointSet& other) const {
  if (domain_ == other.domain_) return true;
  return domain_ && other.domain_ && *domain_ == *other.domain_;
}

PointSet superpose(const PointSet& a, const PointSet& b) {
  if (!a.domain() || !b.domain() || !a.same_domain(b)) {
    throw UsageError("superpose: domain mismatch");
  }
  std::vector<double> flat;
  flat.reserve(a.raw_flat().size() + b.raw_flat().size());
  flat.insert(flat.end(), a.raw_flat().begin(), a.raw_flat().end());
  flat.insert(flat.end(), b.raw_flat().begin(), b.raw_flat().end());
  return PointSet::from_raw_flat(a.domain(), std::move(flat));
}

ThinResult thin(const PointSet& x, double keep_prob, Rng& rng) {
  if (!(keep_prob >= 0.0 && keep_prob <= 1.0)) {
    throw UsageError("thin: keep_prob must lie in [0, 1]");
  }
  ThinResult r;
  r.kept_indices.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (rng.bernoulli(keep_prob)) r.kept_indices.push_back(i);
  }
  r.kept = x.subset(r.kept_indices);
  return r;
}

}  // namespace ppdiff
