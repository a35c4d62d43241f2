#include "ppdiff/mask.hpp"

#include <cmath>

#include "ppdiff/errors.hpp"

namespace ppdiff {

Mask Mask::from_boxes(const DomainPtr& domain, const std::vector<Box>& raw_boxes,
                      bool complement) {
  if (!domain) throw MaskError("Mask: null domain");
  Mask m;
  m.complement_ = complement;
  const int d = domain->dim();
  for (const auto& b : raw_boxes) {
    if (static_cast<int>(b.lower.size()) != d || static_cast<int>(b.upper.size()) != d) {
      throw MaskError("Mask: box dimension does not match domain");
    }
    Box nb;
    nb.lower.resize(d);
    nb.upper.resize(d);
    for (int a = 0; a < d; ++a) {
      if (!std::isfinite(b.lower[a]) || !std::isfinite(b.upper[a]) ||
          !(b.lower[a] <= b.upper[a])) {
        throw MaskError("Mask: box bounds must be finite with lower <= upper");
      }
      nb.lower[a] = domain->normalize(b.lower[a], a);
      nb.upper[a] = domain->normalize(b.upper[a], a);
    }
    m.boxes_.push_back(std::move(nb));
  }
  return m;
}

Mask Mask::from_predicate(std::function<bool(std::span<const double>)> pred,
                          bool complement) {
  if (!pred) throw MaskError("Mask: null predicate");
  Mask m;
  m.pred_ = std::move(pred);
  m.complement_ = complement;
  return m;
}

bool Mask::value(std::span<const double> p) const {
  bool v = false;
  if (pred_) {
    v = pred_(p);
  } else {
    for (const auto& b : boxes_) {
      bool inside = true;
      for (std::size_t a = 0; a < p.size(); ++a) {
        if (!(p[a] >= b.lower[a] && p[a] <= b.upper[a])) {
          inside = false;
          break;
        }
      }
      if (inside) {
        v = true;
        break;
      }
    }
  }
  return complement_ ? !v : v;
}

std::size_t count(const PointSet& x, const Mask& c) {
  return count_if(x, [&](std::span<const double> p) { return c.value(p); });
}

std::pair<PointSet, PointSet> split_by_mask(const PointSet& x, const Mask& c) {
  std::vector<std::size_t> in, out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    (c.value(x.point(i)) ? in : out).push_back(i);
  }
  return {x.subset(in), x.subset(out)};
}

}  // namespace ppdiff
