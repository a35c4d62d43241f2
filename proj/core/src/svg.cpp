#include "ppdiff/svg.hpp"

#include <fstream>

#include "ppdiff/errors.hpp"

namespace ppdiff {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kMargin = 24.0;

double px(double u) { return kMargin + (u + 1.0) * 0.5 * (kWidth - 2.0 * kMargin); }
double py(double v) { return kHeight - kMargin - (v + 1.0) * 0.5 * (kHeight - 2.0 * kMargin); }

}  // namespace

void write_scatter_svg(const std::string& path, const PointSet& points, const Mask* mask) {
  const auto& dom = *points.domain();
  const int x_axis = dom.ordered_axis().value_or(0);
  int y_axis = -1;
  for (int k = 0; k < dom.dim(); ++k) {
    if (k != x_axis) {
      y_axis = k;
      break;
    }
  }

  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n";

  if (mask != nullptr) {
    for (const auto& box : mask->normalized_boxes()) {
      const double x0 = px(box.lower[x_axis]);
      const double x1 = px(box.upper[x_axis]);
      double y0 = py(1.0), y1 = py(-1.0);
      if (y_axis >= 0) {
        y0 = py(box.upper[y_axis]);
        y1 = py(box.lower[y_axis]);
      }
      out << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << x1 - x0 << "\" height=\""
          << y1 - y0 << "\" fill=\"#6baed6\" fill-opacity=\"0.25\"/>\n";
    }
  }

  out << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kWidth - 2 * kMargin
      << "\" height=\"" << kHeight - 2 * kMargin
      << "\" fill=\"none\" stroke=\"#555555\" stroke-width=\"1\"/>\n";

  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto p = points.point(i);
    const double cx = px(p[x_axis]);
    const double cy = y_axis >= 0 ? py(p[y_axis]) : kHeight * 0.5;
    out << "<circle cx=\"" << cx << "\" cy=\"" << cy
        << "\" r=\"3\" fill=\"#d62728\" fill-opacity=\"0.8\"/>\n";
  }
  out << "</svg>\n";
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace ppdiff
