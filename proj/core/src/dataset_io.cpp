#include "ppdiff/dataset_io.hpp"

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "ppdiff/errors.hpp"

namespace ppdiff {

namespace {

using nlohmann::json;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json parse_line(const std::string& line, const std::string& path, std::size_t lineno) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw IoError(path + ":" + std::to_string(lineno) + ": invalid JSON record");
  }
  return j;
}

std::vector<double> number_array(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_array()) {
    throw IoError(where + ": missing array field \"" + key + "\"");
  }
  std::vector<double> out;
  out.reserve(j[key].size());
  for (const auto& v : j[key]) {
    if (!v.is_number()) throw IoError(where + ": non-numeric entry in \"" + key + "\"");
    out.push_back(v.get<double>());
  }
  return out;
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

void save_dataset(const std::string& path, const DomainPtr& domain,
                  const std::vector<PointSet>& sets) {
  if (!domain) throw UsageError("save_dataset: null domain");
  for (const auto& s : sets) {
    if (s.domain() == nullptr || !(*s.domain() == *domain)) {
      throw UsageError("save_dataset: set domain differs from header domain");
    }
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "{\"dim\": " << domain->dim() << ", \"lower\": [";
  for (int k = 0; k < domain->dim(); ++k) {
    out << (k ? ", " : "") << fmt17(domain->lower()[k]);
  }
  out << "], \"upper\": [";
  for (int k = 0; k < domain->dim(); ++k) {
    out << (k ? ", " : "") << fmt17(domain->upper()[k]);
  }
  out << "], \"ordered_axis\": ";
  if (domain->ordered_axis()) {
    out << *domain->ordered_axis();
  } else {
    out << "null";
  }
  out << "}\n";
  for (const auto& s : sets) {
    out << "{\"points\": [";
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto p = s.raw_point(i);
      out << (i ? ", [" : "[");
      for (int k = 0; k < domain->dim(); ++k) out << (k ? ", " : "") << fmt17(p[k]);
      out << "]";
    }
    out << "]}\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

std::pair<DomainPtr, std::vector<PointSet>> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file (header expected)");

  const json header = parse_line(line, path, 1);
  const std::string where = path + ":1";
  if (!header.contains("dim") || !header["dim"].is_number_integer()) {
    throw IoError(where + ": missing integer field \"dim\"");
  }
  const int dim = header["dim"].get<int>();
  const std::vector<double> lower = number_array(header, "lower", where);
  const std::vector<double> upper = number_array(header, "upper", where);
  if (dim < 1 || lower.size() != static_cast<std::size_t>(dim) || upper.size() != lower.size()) {
    throw IoError(where + ": dim/lower/upper are inconsistent");
  }
  std::optional<int> ordered;
  if (header.contains("ordered_axis") && !header["ordered_axis"].is_null()) {
    if (!header["ordered_axis"].is_number_integer()) {
      throw IoError(where + ": \"ordered_axis\" must be an integer or null");
    }
    ordered = header["ordered_axis"].get<int>();
  }
  DomainPtr domain;
  try {
    domain = std::make_shared<const Domain>(lower, upper, ordered);
  } catch (const Error& e) {
    throw IoError(where + ": " + e.what());
  }

  std::vector<PointSet> sets;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    const std::string rec = path + ":" + std::to_string(lineno);
    const json j = parse_line(line, path, lineno);
    if (!j.contains("points") || !j["points"].is_array()) {
      throw IoError(rec + ": missing array field \"points\"");
    }
    std::vector<std::vector<double>> pts;
    pts.reserve(j["points"].size());
    std::size_t idx = 0;
    for (const auto& p : j["points"]) {
      if (!p.is_array() || p.size() != static_cast<std::size_t>(dim)) {
        throw IoError(rec + ": point " + std::to_string(idx) + " is not a " +
                      std::to_string(dim) + "-vector");
      }
      std::vector<double> coords;
      coords.reserve(p.size());
      for (std::size_t k = 0; k < p.size(); ++k) {
        if (!p[k].is_number()) {
          throw IoError(rec + ": point " + std::to_string(idx) + " has a non-numeric coordinate");
        }
        const double v = p[k].get<double>();
        if (!(v >= lower[k] && v <= upper[k])) {
          std::ostringstream msg;
          msg << rec << ": point " << idx << " coordinate " << k << " = " << fmt17(v)
              << " outside [" << fmt17(lower[k]) << ", " << fmt17(upper[k]) << "]";
          throw IoError(msg.str());
        }
        coords.push_back(v);
      }
      pts.push_back(std::move(coords));
      ++idx;
    }
    try {
      sets.push_back(PointSet::from_raw(domain, pts));
    } catch (const Error& e) {
      throw IoError(rec + ": " + e.what());
    }
  }
  return {domain, std::move(sets)};
}

Mask load_mask(const std::string& path, const DomainPtr& domain, bool complement) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_array()) {
    throw IoError(path + ": expected a JSON array of boxes");
  }
  std::vector<Mask::Box> boxes;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string where = path + ": box " + std::to_string(i);
    if (!j[i].is_object()) throw IoError(where + " is not an object");
    Mask::Box box;
    box.lower = number_array(j[i], "lower", where);
    box.upper = number_array(j[i], "upper", where);
    boxes.push_back(std::move(box));
  }
  try {
    return Mask::from_boxes(domain, boxes, complement);
  } catch (const Error& e) {
    throw IoError(path + ": " + e.what());
  }
}

}  // namespace ppdiff
