#pragma once

#include <string>

#include "ppdiff/mask.hpp"
#include "ppdiff/point_set.hpp"

namespace ppdiff {

// Scatter plot of one point set as SVG 1.1. The ordered axis (or axis 0) maps
// to the horizontal position; one-dimensional sets sit on a mid-height line.
// If a box-backed mask is given, its boxes are shaded.
void write_scatter_svg(const std::string& path, const PointSet& points,
                       const Mask* mask = nullptr);

}  // namespace ppdiff
