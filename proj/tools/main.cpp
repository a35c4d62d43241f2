#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ppdiff/datagen.hpp"
#include "ppdiff/dataset_io.hpp"
#include "ppdiff/errors.hpp"
#include "ppdiff/metrics.hpp"
#include "ppdiff/model_io.hpp"
#include "ppdiff/sampling.hpp"
#include "ppdiff/schedule.hpp"
#include "ppdiff/svg.hpp"
#include "ppdiff/training.hpp"

namespace {

using nlohmann::json;
using namespace ppdiff;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::uint64_t h = 14695981039346656037ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  char out[20];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return out;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct Manifest {
  json doc = json::object();

  Manifest(const std::string& command, int argc, char** argv) {
    doc["command"] = command;
    doc["argv"] = std::vector<std::string>(argv, argv + argc);
    doc["inputs"] = json::object();
    doc["outputs"] = json::object();
  }
  void input(const std::string& path) { doc["inputs"][path] = fnv1a64_file(path); }
  void output(const std::string& path) { doc["outputs"][path] = fnv1a64_file(path); }
  void write(const std::string& out_path, double total_seconds) {
    doc["timings"] = {{"total_seconds", total_seconds}};
    const std::string path = out_path + ".manifest.json";
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << doc.dump(2) << "\n";
  }
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) parts.push_back(item);
  return parts;
}

std::vector<double> parse_doubles(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& tok : split(s, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError(what + ": cannot parse number \"" + tok + "\"");
    }
  }
  return out;
}

json schedule_summary(const DiffusionSchedule& schedule) {
  return {{"steps", schedule.steps()},
          {"noise_rate", schedule.noise_rate()},
          {"alpha_bar_final", schedule.alpha_bar(schedule.steps())}};
}

// ---------------------------------------------------------------------------
// datagen

struct DatagenOpts {
  std::string kind, out;
  int num = 100;
  std::uint64_t seed = 1;
  int dim = 0;  // 0 = pick per kind
  int ordered_axis = -2;  // -2 = pick per kind, -1 = none
  std::vector<double> lower, upper;
  double rate = 10.0;
  double rate_max = 0.0;
  std::vector<std::string> bumps;
  double mu = 1.0, alpha = 0.5, beta = 1.0, kernel_width = 0.1;
  int arms = 5;
  int workers = 1;
};

int run_datagen(const DatagenOpts& o, int argc, char** argv) {
  Stopwatch timer;
  SyntheticSpec spec;
  spec.kind = synthetic_kind_from_string(o.kind);
  spec.num_instances = o.num;
  spec.seed = o.seed;
  spec.rate = o.rate;
  spec.mu = o.mu;
  spec.alpha_h = o.alpha;
  spec.beta_h = o.beta;
  spec.kernel_width = o.kernel_width;
  spec.arms = o.arms;

  int dim = o.dim;
  if (dim == 0) dim = spec.kind == SyntheticKind::kPinwheelHawkes ? 3 : 2;
  std::optional<int> ordered;
  if (o.ordered_axis >= 0) {
    ordered = o.ordered_axis;
  } else if (o.ordered_axis == -2 && (spec.kind == SyntheticKind::kHawkesSt ||
                                      spec.kind == SyntheticKind::kPinwheelHawkes)) {
    ordered = 0;
  }
  std::vector<double> lower = o.lower.empty() ? std::vector<double>(dim, 0.0) : o.lower;
  std::vector<double> upper = o.upper.empty() ? std::vector<double>(dim, 1.0) : o.upper;
  if (lower.size() != static_cast<std::size_t>(dim) || upper.size() != lower.size()) {
    throw UsageError("datagen: --lower/--upper must have --dim entries");
  }
  const DomainPtr domain = std::make_shared<const Domain>(lower, upper, ordered);

  if (spec.kind == SyntheticKind::kInhomogeneousPoisson) {
    if (o.bumps.empty()) {
      throw UsageError("datagen: inhomogeneous_poisson needs at least one --bump c1,..,cd,width,weight");
    }
    std::vector<std::vector<double>> centers;
    std::vector<double> widths, weights;
    double weight_sum = 0.0;
    for (const auto& b : o.bumps) {
      const std::vector<double> v = parse_doubles(b, "--bump");
      if (v.size() != static_cast<std::size_t>(dim) + 2) {
        throw UsageError("datagen: --bump needs dim+2 numbers (center, width, weight)");
      }
      centers.emplace_back(v.begin(), v.begin() + dim);
      widths.push_back(v[static_cast<std::size_t>(dim)]);
      weights.push_back(v[static_cast<std::size_t>(dim) + 1]);
      weight_sum += weights.back();
    }
    spec.rate_field = gaussian_bump_field(std::move(centers), std::move(widths), std::move(weights));
    spec.rate_max = o.rate_max > 0.0 ? o.rate_max : weight_sum;
  }

  const std::vector<PointSet> sets = gen_dataset(spec, domain, o.workers);
  save_dataset(o.out, domain, sets);

  Manifest manifest("datagen", argc, argv);
  manifest.doc["seed"] = spec.seed;
  manifest.doc["config"] = {{"kind", o.kind},      {"num", o.num},
                            {"dim", dim},          {"lower", lower},
                            {"upper", upper},      {"rate", o.rate},
                            {"rate_max", spec.rate_max}, {"mu", o.mu},
                            {"alpha", o.alpha},    {"beta", o.beta},
                            {"kernel_width", o.kernel_width}, {"arms", o.arms},
                            {"workers", o.workers}};
  if (ordered) manifest.doc["config"]["ordered_axis"] = *ordered;
  manifest.output(o.out);
  manifest.write(o.out, timer.seconds());
  std::cout << "wrote " << sets.size() << " records to " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
  std::string data, val, out, history, config;
  int steps = 100;
  std::string shape = "linear";
  int d_model = 32, heads = 4, blocks = 2, ffn_hidden = 32, components = 16, n_max = 0;
  TrainConfig tc;
  std::string eval_metric;  // set iff flag passed
};

void apply_config_file(const std::string& path, TrainConfig& tc) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::size_t eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "epochs_max") tc.epochs_max = std::stoi(value);
      else if (key == "batch_size") tc.batch_size = std::stoi(value);
      else if (key == "lr") tc.lr = std::stod(value);
      else if (key == "weight_decay") tc.weight_decay = std::stod(value);
      else if (key == "clip_norm") tc.clip_norm = std::stod(value);
      else if (key == "early_stop_samples") tc.early_stop_samples = std::stoi(value);
      else if (key == "early_stop_patience") tc.early_stop_patience = std::stoi(value);
      else if (key == "eval_metric") tc.eval_metric = eval_metric_from_string(value);
      else if (key == "eval_every") tc.eval_every = std::stoi(value);
      else if (key == "seed") tc.seed = std::stoull(value);
      else if (key == "workers") tc.workers = std::stoi(value);
      else throw UsageError(path + ":" + std::to_string(lineno) + ": unknown key \"" + key + "\"");
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": cannot parse value \"" + value +
                       "\" for key \"" + key + "\"");
    }
  }
}

json train_config_json(const TrainConfig& tc) {
  return {{"epochs_max", tc.epochs_max},
          {"batch_size", tc.batch_size},
          {"lr", tc.lr},
          {"weight_decay", tc.weight_decay},
          {"clip_norm", tc.clip_norm},
          {"early_stop_samples", tc.early_stop_samples},
          {"early_stop_patience", tc.early_stop_patience},
          {"eval_metric", to_string(tc.eval_metric)},
          {"eval_every", tc.eval_every},
          {"seed", tc.seed},
          {"workers", tc.workers}};
}

int run_train(const TrainOpts& o, int argc, char** argv) {
  Stopwatch timer;
  auto [domain, train_sets] = load_dataset(o.data);
  auto [val_domain, val_sets] = load_dataset(o.val);
  if (!val_domain || !domain || !(*val_domain == *domain)) {
    throw UsageError("train: --data and --val use different domains");
  }

  double mean_card = 0.0;
  std::size_t max_card = 0;
  for (const auto& s : train_sets) {
    mean_card += static_cast<double>(s.size());
    max_card = std::max(max_card, s.size());
  }
  if (train_sets.empty()) throw UsageError("train: --data holds no records");
  mean_card /= static_cast<double>(train_sets.size());
  if (!(mean_card > 0.0)) {
    throw UsageError("train: training data is empty; cannot calibrate the noise intensity");
  }

  const DiffusionSchedule schedule = make_schedule(
      o.steps, schedule_shape_from_string(o.shape), mean_card, domain->normalized_volume());

  DenoiserConfig cfg;
  cfg.dim = domain->dim();
  cfg.t_max = o.steps;
  cfg.d_model = o.d_model;
  cfg.heads = o.heads;
  cfg.blocks = o.blocks;
  cfg.ffn_hidden = o.ffn_hidden;
  cfg.mixture_components = o.components;
  cfg.n_max = o.n_max > 0 ? o.n_max : static_cast<int>(2 * max_card);
  NeuralDenoiser model(cfg, o.tc.seed);

  const TrainResult result = train(model, train_sets, val_sets, o.tc, schedule);

  const std::string history_path = o.history.empty() ? o.out + ".history.csv" : o.history;
  {
    std::ofstream hist(history_path);
    if (!hist) throw IoError("cannot open for writing: " + history_path);
    hist << "epoch,bce,nll,val_metric\n";
    for (const auto& row : result.history) {
      hist << row.epoch << "," << fmt17(row.bce) << "," << fmt17(row.nll) << ",";
      if (row.val_metric) hist << fmt17(*row.val_metric);
      hist << "\n";
    }
  }
  save_model(o.out, model, schedule, domain);

  Manifest manifest("train", argc, argv);
  manifest.doc["seed"] = o.tc.seed;
  manifest.doc["config"] = train_config_json(o.tc);
  manifest.doc["config"]["steps"] = o.steps;
  manifest.doc["config"]["shape"] = o.shape;
  manifest.doc["config"]["d_model"] = cfg.d_model;
  manifest.doc["config"]["heads"] = cfg.heads;
  manifest.doc["config"]["blocks"] = cfg.blocks;
  manifest.doc["config"]["ffn_hidden"] = cfg.ffn_hidden;
  manifest.doc["config"]["mixture_components"] = cfg.mixture_components;
  manifest.doc["config"]["n_max"] = cfg.n_max;
  manifest.doc["schedule"] = schedule_summary(schedule);
  manifest.doc["result"] = {{"epochs_run", result.epochs_run}, {"best_epoch", result.best_epoch}};
  if (result.best_val) manifest.doc["result"]["best_val"] = *result.best_val;
  manifest.input(o.data);
  manifest.input(o.val);
  if (!o.config.empty()) manifest.input(o.config);
  manifest.output(o.out);
  manifest.output(history_path);
  manifest.write(o.out, timer.seconds());
  std::cout << "trained " << result.epochs_run << " epochs (best epoch " << result.best_epoch
            << "), model written to " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// sample

struct SampleOpts {
  std::string model, out, mask_path, known_path, svg_path;
  int num = 10;
  std::uint64_t seed = 1;
  int workers = 1;
  bool mask_complement = false;
};

int run_sample(const SampleOpts& o, int argc, char** argv) {
  Stopwatch timer;
  ModelBundle bundle = load_model(o.model);

  std::optional<Mask> mask;
  std::optional<PointSet> known;
  if (!o.mask_path.empty()) {
    mask = load_mask(o.mask_path, bundle.domain, o.mask_complement);
    if (!o.known_path.empty()) {
      auto [kd, ksets] = load_dataset(o.known_path);
      if (!(*kd == *bundle.domain)) {
        throw UsageError("sample: --known domain differs from the model domain");
      }
      if (ksets.size() != 1) {
        throw UsageError("sample: --known file must contain exactly one record");
      }
      known = std::move(ksets.front());
    } else {
      known = PointSet::from_raw(bundle.domain, {});
    }
  } else if (!o.known_path.empty()) {
    throw UsageError("sample: --known requires --mask");
  }

  if (o.num < 1) throw UsageError("sample: --num must be >= 1");
  std::vector<SampleTask> tasks(static_cast<std::size_t>(o.num));
  if (mask) {
    for (auto& t : tasks) {
      t.known = &*known;
      t.mask = &*mask;
    }
  }
  const std::vector<PointSet> samples =
      sample_batch(*bundle.model, bundle.schedule, bundle.domain, tasks, o.seed, o.workers);
  save_dataset(o.out, bundle.domain, samples);
  if (!o.svg_path.empty()) {
    write_scatter_svg(o.svg_path, samples.front(), mask ? &*mask : nullptr);
  }

  Manifest manifest("sample", argc, argv);
  manifest.doc["seed"] = o.seed;
  manifest.doc["config"] = {{"num", o.num},
                            {"workers", o.workers},
                            {"conditional", static_cast<bool>(mask)},
                            {"mask_complement", o.mask_complement}};
  manifest.doc["schedule"] = schedule_summary(bundle.schedule);
  manifest.input(o.model);
  if (!o.mask_path.empty()) manifest.input(o.mask_path);
  if (!o.known_path.empty()) manifest.input(o.known_path);
  manifest.output(o.out);
  if (!o.svg_path.empty()) manifest.output(o.svg_path);
  manifest.write(o.out, timer.seconds());
  std::cout << "wrote " << samples.size() << " samples to " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOpts {
  std::string data, samples, model, metrics = "sl,mmd_wd", out;
  int num = 1000;
  std::uint64_t seed = 1;
  int workers = 1;
  double bandwidth = 0.0;
};

int run_evaluate(const EvaluateOpts& o, int argc, char** argv) {
  Stopwatch timer;
  if (o.samples.empty() == o.model.empty()) {
    throw UsageError("evaluate: give exactly one of --samples or --model");
  }
  auto [data_domain, data_sets] = load_dataset(o.data);
  if (data_sets.empty()) throw UsageError("evaluate: --data holds no records");

  std::vector<PointSet> gen_sets;
  if (!o.samples.empty()) {
    auto [sd, ss] = load_dataset(o.samples);
    if (!(*sd == *data_domain)) {
      throw UsageError("evaluate: --samples domain differs from --data domain");
    }
    gen_sets = std::move(ss);
    if (gen_sets.empty()) throw UsageError("evaluate: --samples holds no records");
  } else {
    ModelBundle bundle = load_model(o.model);
    if (!(*bundle.domain == *data_domain)) {
      throw UsageError("evaluate: model domain differs from --data domain");
    }
    gen_sets = sample_many(*bundle.model, bundle.schedule, bundle.domain, o.num, o.seed,
                           o.workers);
  }

  const std::optional<double> bw =
      o.bandwidth > 0.0 ? std::optional<double>(o.bandwidth) : std::nullopt;
  std::vector<MetricReport> rows;
  for (const auto& name : split(o.metrics, ',')) {
    MetricReport r;
    r.metric = name;
    r.n_a = gen_sets.size();
    r.n_b = data_sets.size();
    r.seed = o.seed;
    if (name == "sl") {
      r.value = sl_wasserstein(cardinalities(gen_sets), cardinalities(data_sets));
    } else if (name == "mae") {
      r.value = count_mae(gen_sets, data_sets);
    } else if (name == "cd") {
      r.value = mean_paired_distance(gen_sets, data_sets, SetDistanceKind::kCounting);
    } else if (name == "wd") {
      r.value = mean_paired_distance(gen_sets, data_sets, SetDistanceKind::kWasserstein);
    } else if (name == "mmd_wd") {
      const MmdResult m = mmd(gen_sets, data_sets, SetDistanceKind::kWasserstein, bw, o.workers);
      r.value = m.value;
      r.bandwidth = m.bandwidth;
    } else if (name == "mmd_cd") {
      const MmdResult m = mmd(gen_sets, data_sets, SetDistanceKind::kCounting, bw, o.workers);
      r.value = m.value;
      r.bandwidth = m.bandwidth;
    } else {
      throw UsageError("evaluate: unknown metric \"" + name + "\"");
    }
    rows.push_back(std::move(r));
  }

  std::ofstream out(o.out);
  if (!out) throw IoError("cannot open for writing: " + o.out);
  out << "metric,value,n_a,n_b,bandwidth,seed\n";
  for (const auto& r : rows) {
    out << r.metric << "," << fmt17(r.value) << "," << r.n_a << "," << r.n_b << ","
        << fmt17(r.bandwidth) << "," << r.seed << "\n";
  }
  out.close();

  Manifest manifest("evaluate", argc, argv);
  manifest.doc["seed"] = o.seed;
  manifest.doc["config"] = {{"metrics", o.metrics},
                            {"num", o.num},
                            {"workers", o.workers},
                            {"bandwidth", o.bandwidth}};
  manifest.input(o.data);
  if (!o.samples.empty()) manifest.input(o.samples);
  if (!o.model.empty()) manifest.input(o.model);
  manifest.output(o.out);
  manifest.write(o.out, timer.seconds());
  for (const auto& r : rows) std::cout << r.metric << " = " << r.value << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// benchmark

struct BenchmarkOpts {
  std::string model, out, sizes = "100,1000";
  int runs = 10;
  int per_run = 10;
  std::uint64_t seed = 1;
  int workers = 1;
};

int run_benchmark(const BenchmarkOpts& o, int argc, char** argv) {
  Stopwatch timer;
  ModelBundle bundle = load_model(o.model);
  if (o.runs < 1 || o.per_run < 1) throw UsageError("benchmark: --runs/--per-run must be >= 1");

  std::vector<std::pair<int, double>> results;
  for (const auto& tok : split(o.sizes, ',')) {
    const std::vector<double> v = parse_doubles(tok, "--sizes");
    const int size = static_cast<int>(v.at(0));
    if (size < 1) throw UsageError("benchmark: sizes must be >= 1");
    // Re-rate the noise process so the expected sample cardinality equals the
    // target size; the schedule shape is unchanged.
    const DiffusionSchedule sized(bundle.schedule.alpha_bar_all(), bundle.schedule.beta_bar_all(),
                                  static_cast<double>(size) / bundle.domain->normalized_volume());
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(o.runs));
    for (int r = 0; r < o.runs; ++r) {
      Stopwatch run_timer;
      const std::uint64_t run_seed =
          splitmix64(o.seed ^ (static_cast<std::uint64_t>(size) * 1000003ULL +
                               static_cast<std::uint64_t>(r)));
      (void)sample_many(*bundle.model, sized, bundle.domain, o.per_run, run_seed, o.workers);
      times.push_back(run_timer.seconds());
    }
    std::sort(times.begin(), times.end());
    const std::size_t mid = times.size() / 2;
    const double median =
        times.size() % 2 == 1 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
    results.emplace_back(size, median);
    std::cout << "size " << size << ": median " << median << " s over " << o.runs << " runs of "
              << o.per_run << " samples\n";
  }

  std::ofstream out(o.out);
  if (!out) throw IoError("cannot open for writing: " + o.out);
  out << "size,median_seconds\n";
  for (const auto& [size, median] : results) out << size << "," << fmt17(median) << "\n";
  out.close();

  Manifest manifest("benchmark", argc, argv);
  manifest.doc["seed"] = o.seed;
  manifest.doc["config"] = {{"sizes", o.sizes},
                            {"runs", o.runs},
                            {"per_run", o.per_run},
                            {"workers", o.workers}};
  manifest.input(o.model);
  manifest.output(o.out);
  manifest.write(o.out, timer.seconds());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion-based generative modeling of point processes on bounded domains"};
  app.require_subcommand(1);

  DatagenOpts dg;
  CLI::App* cmd_dg = app.add_subcommand("datagen", "Generate synthetic datasets");
  cmd_dg->add_option("--kind", dg.kind,
                     "homogeneous_poisson|inhomogeneous_poisson|hawkes_st|pinwheel_hawkes")
      ->required();
  cmd_dg->add_option("--out", dg.out, "Output JSONL path")->required();
  cmd_dg->add_option("--num", dg.num, "Number of instances");
  cmd_dg->add_option("--seed", dg.seed, "RNG seed");
  cmd_dg->add_option("--dim", dg.dim, "Domain dimension (default: per kind)");
  cmd_dg->add_option("--ordered-axis", dg.ordered_axis, "Ordered axis (-1 = none)");
  cmd_dg->add_option("--lower", dg.lower, "Domain lower bounds");
  cmd_dg->add_option("--upper", dg.upper, "Domain upper bounds");
  cmd_dg->add_option("--rate", dg.rate, "Homogeneous intensity (points per raw volume)");
  cmd_dg->add_option("--rate-max", dg.rate_max, "Thinning bound (default: sum of bump weights)");
  cmd_dg->add_option("--bump", dg.bumps, "Gaussian bump c1,..,cd,width,weight (repeatable)");
  cmd_dg->add_option("--mu", dg.mu, "Hawkes baseline intensity");
  cmd_dg->add_option("--alpha", dg.alpha, "Hawkes excitation");
  cmd_dg->add_option("--beta", dg.beta, "Hawkes decay");
  cmd_dg->add_option("--kernel-width", dg.kernel_width, "Offspring spatial kernel width");
  cmd_dg->add_option("--arms", dg.arms, "Pinwheel arm count");
  cmd_dg->add_option("--workers", dg.workers, "Worker threads");

  TrainOpts tr;
  CLI::App* cmd_tr = app.add_subcommand("train", "Train a denoising model");
  cmd_tr->add_option("--data", tr.data, "Training JSONL")->required();
  cmd_tr->add_option("--val", tr.val, "Validation JSONL")->required();
  cmd_tr->add_option("--out", tr.out, "Output model path")->required();
  cmd_tr->add_option("--history", tr.history, "History CSV path (default <out>.history.csv)");
  cmd_tr->add_option("--config", tr.config, "key=value training config file");
  cmd_tr->add_option("--steps", tr.steps, "Diffusion steps T");
  cmd_tr->add_option("--shape", tr.shape, "Schedule shape: linear|cosine");
  cmd_tr->add_option("--d-model", tr.d_model, "Encoder width");
  cmd_tr->add_option("--heads", tr.heads, "Attention heads");
  cmd_tr->add_option("--blocks", tr.blocks, "Encoder blocks");
  cmd_tr->add_option("--ffn-hidden", tr.ffn_hidden, "Encoder feed-forward width");
  cmd_tr->add_option("--components", tr.components, "Mixture components");
  cmd_tr->add_option("--n-max", tr.n_max, "Count head support (default 2x max cardinality)");
  CLI::Option* f_epochs = cmd_tr->add_option("--epochs", tr.tc.epochs_max, "Max epochs");
  CLI::Option* f_bs = cmd_tr->add_option("--batch-size", tr.tc.batch_size, "Batch size");
  CLI::Option* f_lr = cmd_tr->add_option("--lr", tr.tc.lr, "Learning rate");
  CLI::Option* f_wd = cmd_tr->add_option("--weight-decay", tr.tc.weight_decay, "Weight decay");
  CLI::Option* f_clip = cmd_tr->add_option("--clip-norm", tr.tc.clip_norm, "Gradient clip norm");
  CLI::Option* f_es = cmd_tr->add_option("--eval-samples", tr.tc.early_stop_samples,
                                         "Validation samples per evaluation");
  CLI::Option* f_pat = cmd_tr->add_option("--patience", tr.tc.early_stop_patience,
                                          "Evaluations without improvement before stopping");
  CLI::Option* f_em = cmd_tr->add_option("--eval-metric", tr.eval_metric,
                                         "sl_wasserstein|cd_mmd");
  CLI::Option* f_ee = cmd_tr->add_option("--eval-every", tr.tc.eval_every,
                                         "Epochs between evaluations (0 = auto)");
  CLI::Option* f_seed = cmd_tr->add_option("--seed", tr.tc.seed, "RNG seed");
  CLI::Option* f_workers = cmd_tr->add_option("--workers", tr.tc.workers, "Worker threads");

  SampleOpts sm;
  CLI::App* cmd_sm = app.add_subcommand("sample", "Generate samples from a model");
  cmd_sm->add_option("--model", sm.model, "Model file")->required();
  cmd_sm->add_option("--out", sm.out, "Output JSONL path")->required();
  cmd_sm->add_option("--num", sm.num, "Number of samples");
  cmd_sm->add_option("--seed", sm.seed, "RNG seed");
  cmd_sm->add_option("--workers", sm.workers, "Worker threads");
  cmd_sm->add_option("--mask", sm.mask_path, "Conditioning mask JSON (list of boxes)");
  cmd_sm->add_flag("--mask-complement", sm.mask_complement, "Condition on the box complement");
  cmd_sm->add_option("--known", sm.known_path, "Known points JSONL (single record)");
  cmd_sm->add_option("--svg", sm.svg_path, "Write a scatter SVG of the first sample");

  EvaluateOpts ev;
  CLI::App* cmd_ev = app.add_subcommand("evaluate", "Compare samples against a dataset");
  cmd_ev->add_option("--data", ev.data, "Reference JSONL")->required();
  cmd_ev->add_option("--samples", ev.samples, "Samples JSONL");
  cmd_ev->add_option("--model", ev.model, "Model file (generates --num samples)");
  cmd_ev->add_option("--num", ev.num, "Samples to generate with --model");
  cmd_ev->add_option("--metrics", ev.metrics, "Comma list from sl,mae,cd,wd,mmd_wd,mmd_cd");
  cmd_ev->add_option("--bandwidth", ev.bandwidth, "Fixed MMD bandwidth (default: median)");
  cmd_ev->add_option("--seed", ev.seed, "RNG seed for --model sampling");
  cmd_ev->add_option("--workers", ev.workers, "Worker threads");
  cmd_ev->add_option("--out", ev.out, "Output CSV path")->required();

  BenchmarkOpts bm;
  CLI::App* cmd_bm = app.add_subcommand("benchmark", "Sampling-runtime scaling study");
  cmd_bm->add_option("--model", bm.model, "Model file")->required();
  cmd_bm->add_option("--sizes", bm.sizes, "Comma list of expected cardinalities");
  cmd_bm->add_option("--out", bm.out, "Output CSV path")->required();
  cmd_bm->add_option("--runs", bm.runs, "Timed runs per size");
  cmd_bm->add_option("--per-run", bm.per_run, "Samples per timed run");
  cmd_bm->add_option("--seed", bm.seed, "RNG seed");
  cmd_bm->add_option("--workers", bm.workers, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: class=usage: " << e.what() << "\n";
    return 4;
  }

  try {
    if (*cmd_tr) {
      // CLI flag > config file > default.
      TrainConfig defaults;
      TrainConfig file_cfg = defaults;
      if (!tr.config.empty()) apply_config_file(tr.config, file_cfg);
      TrainConfig merged = file_cfg;
      if (f_epochs->count()) merged.epochs_max = tr.tc.epochs_max;
      if (f_bs->count()) merged.batch_size = tr.tc.batch_size;
      if (f_lr->count()) merged.lr = tr.tc.lr;
      if (f_wd->count()) merged.weight_decay = tr.tc.weight_decay;
      if (f_clip->count()) merged.clip_norm = tr.tc.clip_norm;
      if (f_es->count()) merged.early_stop_samples = tr.tc.early_stop_samples;
      if (f_pat->count()) merged.early_stop_patience = tr.tc.early_stop_patience;
      if (f_em->count()) merged.eval_metric = eval_metric_from_string(tr.eval_metric);
      if (f_ee->count()) merged.eval_every = tr.tc.eval_every;
      if (f_seed->count()) merged.seed = tr.tc.seed;
      if (f_workers->count()) merged.workers = tr.tc.workers;
      TrainOpts resolved = tr;
      resolved.tc = merged;
      return run_train(resolved, argc, argv);
    }
    if (*cmd_dg) return run_datagen(dg, argc, argv);
    if (*cmd_sm) return run_sample(sm, argc, argv);
    if (*cmd_ev) return run_evaluate(ev, argc, argv);
    if (*cmd_bm) return run_benchmark(bm, argc, argv);
  } catch (const IoError& e) {
    std::cerr << "error: class=io: " << e.what() << "\n";
    return 2;
  } catch (const MaskError& e) {
    std::cerr << "error: class=mask: " << e.what() << "\n";
    return 3;
  } catch (const DomainError& e) {
    std::cerr << "error: class=domain: " << e.what() << "\n";
    return 4;
  } catch (const NumericError& e) {
    std::cerr << "error: class=numeric: " << e.what() << "\n";
    return 5;
  } catch (const UsageError& e) {
    std::cerr << "error: class=usage: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: class=internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
