#pragma once

#include <memory>
#include <optional>
#include <vector>

namespace ppdiff {

// Bounded axis-aligned box in raw data units. All point coordinates handled by
// the library are affinely normalized into [-1, 1]^dim on ingestion and
// denormalized back to raw units on output; an optional ordered axis (time)
// marks spatio-temporal data.
class Domain {
 public:
  Domain(std::vector<double> lower, std::vector<double> upper,
         std::optional<int> ordered_axis = std::nullopt);

  int dim() const { return static_cast<int>(lower_.size()); }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  std::optional<int> ordered_axis() const { return ordered_axis_; }

  // Volume of the normalized box [-1, 1]^dim. Intensities used by the noising
  // process are expressed per unit of this volume.
  double normalized_volume() const;
  double raw_volume() const;

  // Per-axis affine maps. normalize clamps the result into [-1, 1] to absorb
  // roundoff at the box faces; denormalize clamps into [lower, upper].
  double normalize(double x, int axis) const;
  double denormalize(double x, int axis) const;
  void normalize_point(const double* raw, double* out) const;
  void denormalize_point(const double* norm, double* out) const;

  bool contains_raw(const double* x) const;

  bool operator==(const Domain& other) const;
  bool operator!=(const Domain& other) const { return !(*this == other); }

 private:
  std::vector<double> lower_, upper_;
  std::vector<double> center_, half_;
  std::optional<int> ordered_axis_;
};

using DomainPtr = std::shared_ptr<const Domain>;

}  // namespace ppdiff
