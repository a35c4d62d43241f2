#include "ppdiff/model_io.hpp"

#include <fstream>
#include <map>

#include <json.hpp>

#include "ppdiff/errors.hpp"

namespace ppdiff {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "ppdiff-model-v1";

json require(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) throw IoError(path + ": missing field \"" + key + "\"");
  return j[key];
}

std::vector<double> doubles(const json& j, const std::string& path, const std::string& key) {
  if (!j.is_array()) throw IoError(path + ": \"" + key + "\" must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw IoError(path + ": non-numeric entry in \"" + key + "\"");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

void save_model(const std::string& path, const NeuralDenoiser& model,
                const DiffusionSchedule& schedule, const DomainPtr& domain) {
  if (!domain) throw UsageError("save_model: null domain");
  const DenoiserConfig& cfg = model.config();
  json j;
  j["format"] = kFormat;
  j["domain"] = {{"lower", domain->lower()}, {"upper", domain->upper()}};
  if (domain->ordered_axis()) {
    j["domain"]["ordered_axis"] = *domain->ordered_axis();
  } else {
    j["domain"]["ordered_axis"] = nullptr;
  }
  j["schedule"] = {{"alpha_bar", schedule.alpha_bar_all()},
                   {"beta_bar", schedule.beta_bar_all()},
                   {"noise_rate", schedule.noise_rate()}};
  j["hyperparams"] = {{"dim", cfg.dim},
                      {"t_max", cfg.t_max},
                      {"d_model", cfg.d_model},
                      {"heads", cfg.heads},
                      {"blocks", cfg.blocks},
                      {"ffn_hidden", cfg.ffn_hidden},
                      {"mixture_components", cfg.mixture_components},
                      {"n_max", cfg.n_max},
                      {"var_floor", cfg.var_floor}};
  json params = json::object();
  for (const auto& [name, tensor] : model.params().all()) {
    params[name] = {{"shape", {tensor.rows(), tensor.cols()}}, {"values", tensor.values()}};
  }
  j["params"] = std::move(params);

  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << j.dump() << "\n";
  if (!out) throw IoError("write failed: " + path);
}

ModelBundle load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw IoError(path + ": invalid JSON");
  if (!j.contains("format") || j["format"] != kFormat) {
    throw IoError(path + ": not a " + std::string(kFormat) + " file");
  }

  const json jd = require(j, "domain", path);
  std::optional<int> ordered;
  if (jd.contains("ordered_axis") && !jd["ordered_axis"].is_null()) {
    ordered = jd["ordered_axis"].get<int>();
  }
  DomainPtr domain;
  DenoiserConfig cfg;
  try {
    domain = std::make_shared<const Domain>(doubles(require(jd, "lower", path), path, "lower"),
                                            doubles(require(jd, "upper", path), path, "upper"),
                                            ordered);

    const json js = require(j, "schedule", path);
    DiffusionSchedule schedule(doubles(require(js, "alpha_bar", path), path, "alpha_bar"),
                               doubles(require(js, "beta_bar", path), path, "beta_bar"),
                               require(js, "noise_rate", path).get<double>());

    const json jh = require(j, "hyperparams", path);
    cfg.dim = require(jh, "dim", path).get<int>();
    cfg.t_max = require(jh, "t_max", path).get<int>();
    cfg.d_model = require(jh, "d_model", path).get<int>();
    cfg.heads = require(jh, "heads", path).get<int>();
    cfg.blocks = require(jh, "blocks", path).get<int>();
    cfg.ffn_hidden = require(jh, "ffn_hidden", path).get<int>();
    cfg.mixture_components = require(jh, "mixture_components", path).get<int>();
    cfg.n_max = require(jh, "n_max", path).get<int>();
    cfg.var_floor = require(jh, "var_floor", path).get<double>();
    if (cfg.dim != domain->dim()) {
      throw IoError(path + ": hyperparameter dim does not match the domain");
    }
    if (cfg.t_max != schedule.steps()) {
      throw IoError(path + ": hyperparameter t_max does not match the schedule");
    }

    auto model = std::make_unique<NeuralDenoiser>(cfg, /*init_seed=*/0);
    const json jp = require(j, "params", path);
    if (!jp.is_object()) throw IoError(path + ": \"params\" must be an object");
    std::map<std::string, std::vector<double>> values;
    for (const auto& [name, tensor] : model->params().all()) {
      if (!jp.contains(name)) throw IoError(path + ": missing parameter \"" + name + "\"");
      const json& entry = jp[name];
      const json shape = require(entry, "shape", path);
      if (!shape.is_array() || shape.size() != 2 || shape[0].get<int>() != tensor.rows() ||
          shape[1].get<int>() != tensor.cols()) {
        throw IoError(path + ": parameter \"" + name + "\" has the wrong shape");
      }
      auto vals = doubles(require(entry, "values", path), path, name);
      if (vals.size() != static_cast<std::size_t>(tensor.size())) {
        throw IoError(path + ": parameter \"" + name + "\" has the wrong size");
      }
      values.emplace(name, std::move(vals));
    }
    if (jp.size() != values.size()) {
      throw IoError(path + ": file contains parameters unknown to this model");
    }
    model->params().restore_values(values);
    return ModelBundle{std::move(domain), std::move(schedule), std::move(model)};
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    throw IoError(path + ": " + e.what());
  } catch (const json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
}

}  // namespace ppdiff
