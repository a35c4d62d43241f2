#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ppdiff/mask.hpp"
#include "ppdiff/point_set.hpp"

namespace ppdiff {

// Dataset files are JSONL: the first line is a header object
//   {"dim": d, "lower": [...], "upper": [...], "ordered_axis": k|null}
// and every further line one record {"points": [[...], ...]} in raw
// coordinates, serialized with 17 significant digits so that save/load
// round-trips bitwise.
void save_dataset(const std::string& path, const DomainPtr& domain,
                  const std::vector<PointSet>& sets);

std::pair<DomainPtr, std::vector<PointSet>> load_dataset(const std::string& path);

// Mask files are a JSON array of boxes {"lower": [...], "upper": [...]} in raw
// coordinates; the mask is 1 inside the union of boxes (complement flips it).
Mask load_mask(const std::string& path, const DomainPtr& domain, bool complement = false);

}  // namespace ppdiff
