#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "ppdiff/point_set.hpp"

namespace ppdiff {

// Binary conditioning indicator C over the domain. C(x) = 1 marks the known
// (conditioned) region, C(x) = 0 its complement. Backed either by a union of
// closed axis-aligned boxes or by an arbitrary predicate; box corners are
// given in raw units and evaluated in normalized coordinates like everything
// else. The complement flag flips the indicator.
class Mask {
 public:
  struct Box {
    std::vector<double> lower, upper;
  };

  // C = 1 on the union of the boxes (complement = false) or outside of it.
  static Mask from_boxes(const DomainPtr& domain, const std::vector<Box>& raw_boxes,
                         bool complement = false);
  // Predicate over normalized coordinates.
  static Mask from_predicate(std::function<bool(std::span<const double>)> pred,
                             bool complement = false);
  // C = 0 everywhere (the fully unconditioned mask).
  static Mask nothing() { return Mask(); }

  bool value(std::span<const double> norm_point) const;
  bool operator()(std::span<const double> norm_point) const { return value(norm_point); }

  const std::vector<Box>& normalized_boxes() const { return boxes_; }
  bool is_empty_box_list() const { return !pred_ && boxes_.empty() && !complement_; }

 private:
  Mask() = default;

  std::vector<Box> boxes_;  // normalized corners
  std::function<bool(std::span<const double>)> pred_;
  bool complement_ = false;
};

std::size_t count(const PointSet& x, const Mask& c);

// Partition into (points with C = 1, points with C = 0), preserving order.
std::pair<PointSet, PointSet> split_by_mask(const PointSet& x, const Mask& c);

}  // namespace ppdiff
