#include "ppdiff/domain.hpp"

#include <algorithm>
#include <cmath>

#include "ppdiff/errors.hpp"

namespace ppdiff {

Domain::Domain(std::vector<double> lower, std::vector<double> upper,
               std::optional<int> ordered_axis)
    : lower_(std::move(lower)), upper_(std::move(upper)), ordered_axis_(ordered_axis) {
  if (lower_.empty() || lower_.size() != upper_.size()) {
    throw UsageError("Domain: lower/upper must be nonempty and equal length");
  }
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]) || !(lower_[i] < upper_[i])) {
      throw UsageError("Domain: bounds must be finite with lower < upper on every axis");
    }
  }
  if (ordered_axis_ && (*ordered_axis_ < 0 || *ordered_axis_ >= dim())) {
    throw UsageError("Domain: ordered_axis out of range");
  }
  center_.resize(lower_.size());
  half_.resize(lower_.size());
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    center_[i] = 0.5 * (lower_[i] + upper_[i]);
    half_[i] = 0.5 * (upper_[i] - lower_[i]);
  }
}

double Domain::normalized_volume() const { return std::pow(2.0, dim()); }

double Domain::raw_volume() const {
  double v = 1.0;
  for (std::size_t i = 0; i < lower_.size(); ++i) v *= upper_[i] - lower_[i];
  return v;
}

double Domain::normalize(double x, int axis) const {
  const double y = (x - center_[axis]) / half_[axis];
  return std::clamp(y, -1.0, 1.0);
}

double Domain::denormalize(double x, int axis) const {
  const double y = center_[axis] + x * half_[axis];
  return std::clamp(y, lower_[axis], upper_[axis]);
}

void Domain::normalize_point(const double* raw, double* out) const {
  for (int a = 0; a < dim(); ++a) out[a] = normalize(raw[a], a);
}

void Domain::denormalize_point(const double* norm, double* out) const {
  for (int a = 0; a < dim(); ++a) out[a] = denormalize(norm[a], a);
}

bool Domain::contains_raw(const double* x) const {
  for (int a = 0; a < dim(); ++a) {
    if (!(x[a] >= lower_[a] && x[a] <= upper_[a])) return false;
  }
  return true;
}

bool Domain::operator==(const Domain& other) const {
  return lower_ == other.lower_ && upper_ == other.upper_ &&
         ordered_axis_ == other.ordered_axis_;
}

}  // namespace ppdiff
