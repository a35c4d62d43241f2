#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "ppdiff/dataset_io.hpp"
#include "ppdiff/model_io.hpp"
#include "support.hpp"

using namespace ppdiff;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("ppdiff_cli_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

struct RunResult {
  int exit_code = -1;
  std::string err;
};

RunResult run_cli(const TempDir& tmp, const std::string& args) {
  const std::string err_path = tmp.file("stderr.txt");
  const std::string cmd =
      std::string(PPDIFF_CLI_PATH) + " " + args + " > /dev/null 2> " + err_path;
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err_path);
  return r;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.size() && line.back() == ',') cells.push_back("");
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("full pipeline: datagen, train, sample, evaluate, benchmark") {
  TempDir tmp;
  const std::string data = tmp.file("train.jsonl");
  const std::string val = tmp.file("val.jsonl");

  // --- datagen
  auto r = run_cli(tmp, "datagen --kind homogeneous_poisson --rate 6 --num 20 --seed 3 --out " +
                            data);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  r = run_cli(tmp, "datagen --kind homogeneous_poisson --rate 6 --num 8 --seed 4 --out " + val);
  REQUIRE(r.exit_code == 0);
  {
    auto [dom, sets] = load_dataset(data);
    CHECK(sets.size() == 20);
    CHECK(dom->dim() == 2);
    CHECK_FALSE(dom->ordered_axis().has_value());
    CHECK(fs::exists(data + ".manifest.json"));
  }
  // Same seed gives identical bytes, different seed different content.
  const std::string data_b = tmp.file("train_b.jsonl");
  const std::string data_c = tmp.file("train_c.jsonl");
  REQUIRE(run_cli(tmp, "datagen --kind homogeneous_poisson --rate 6 --num 20 --seed 3 --out " +
                           data_b).exit_code == 0);
  REQUIRE(run_cli(tmp, "datagen --kind homogeneous_poisson --rate 6 --num 20 --seed 5 --out " +
                           data_c).exit_code == 0);
  CHECK(slurp(data) == slurp(data_b));
  CHECK(slurp(data) != slurp(data_c));

  // --- train (tiny but real)
  const std::string model = tmp.file("model.json");
  const std::string hist = tmp.file("history.csv");
  const std::string train_flags =
      " --steps 8 --d-model 8 --heads 2 --blocks 1 --ffn-hidden 8 --components 2"
      " --epochs 6 --batch-size 10 --eval-every 3 --eval-samples 5 --seed 11";
  r = run_cli(tmp, "train --data " + data + " --val " + val + " --out " + model + " --history " +
                       hist + train_flags);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  {
    const auto rows = read_csv(hist);
    REQUIRE(rows.size() == 7);  // header + 6 epochs
    CHECK(rows[0] == std::vector<std::string>{"epoch", "bce", "nll", "val_metric"});
    CHECK(rows[1][0] == "1");
    CHECK(rows[3].size() == 4);
    CHECK(rows[3][3] != "");  // eval epoch
    CHECK(rows[2][3] == "");  // non-eval epoch
    ModelBundle bundle = load_model(model);
    CHECK(bundle.schedule.steps() == 8);
    CHECK(bundle.model->config().d_model == 8);
  }
  // Deterministic retrain: identical history and model files.
  const std::string model2 = tmp.file("model2.json");
  const std::string hist2 = tmp.file("history2.csv");
  r = run_cli(tmp, "train --data " + data + " --val " + val + " --out " + model2 + " --history " +
                       hist2 + train_flags);
  REQUIRE(r.exit_code == 0);
  CHECK(slurp(hist) == slurp(hist2));
  CHECK(slurp(model) == slurp(model2));

  // --- sample (unconditional)
  const std::string samples = tmp.file("samples.jsonl");
  r = run_cli(tmp, "sample --model " + model + " --num 10 --seed 21 --out " + samples + " --svg " +
                       tmp.file("plot.svg"));
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  {
    auto [dom, sets] = load_dataset(samples);
    CHECK(sets.size() == 10);
    CHECK(slurp(tmp.file("plot.svg")).find("</svg>") != std::string::npos);
  }
  const std::string samples_b = tmp.file("samples_b.jsonl");
  REQUIRE(run_cli(tmp, "sample --model " + model + " --num 10 --seed 21 --out " + samples_b)
              .exit_code == 0);
  CHECK(slurp(samples) == slurp(samples_b));

  // --- sample (conditional)
  const std::string mask = tmp.file("mask.json");
  spit(mask, R"([{"lower": [0.0, 0.0], "upper": [0.5, 1.0]}])");
  const std::string known = tmp.file("known.jsonl");
  {
    auto [dom, sets] = load_dataset(data);
    save_dataset(known, dom, {PointSet::from_raw(dom, {{0.25, 0.5}, {0.1, 0.9}})});
  }
  const std::string cond = tmp.file("cond.jsonl");
  r = run_cli(tmp, "sample --model " + model + " --mask " + mask + " --known " + known +
                       " --num 6 --seed 31 --out " + cond);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  {
    auto [dom, sets] = load_dataset(cond);
    REQUIRE(sets.size() == 6);
    for (const auto& s : sets) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(s.raw_point(i)[0] > 0.5);  // nothing in the conditioned strip
      }
    }
  }
  // Whole-domain mask: everything known, all generated sets empty.
  const std::string all_mask = tmp.file("all_mask.json");
  spit(all_mask, R"([{"lower": [0.0, 0.0], "upper": [1.0, 1.0]}])");
  const std::string none = tmp.file("none.jsonl");
  r = run_cli(tmp, "sample --model " + model + " --mask " + all_mask + " --known " + known +
                       " --num 3 --seed 31 --out " + none);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  {
    auto [dom, sets] = load_dataset(none);
    for (const auto& s : sets) CHECK(s.size() == 0);
  }
  // Known point outside the mask region is a mask violation.
  const std::string bad_known = tmp.file("bad_known.jsonl");
  {
    auto [dom, sets] = load_dataset(data);
    save_dataset(bad_known, dom, {PointSet::from_raw(dom, {{0.75, 0.5}})});
  }
  r = run_cli(tmp, "sample --model " + model + " --mask " + mask + " --known " + bad_known +
                       " --num 1 --out " + tmp.file("x.jsonl"));
  CHECK(r.exit_code == 3);
  CHECK(r.err.find("class=mask") != std::string::npos);

  // --- evaluate (samples vs data, plus self-comparison)
  const std::string report = tmp.file("report.csv");
  r = run_cli(tmp, "evaluate --data " + data + " --samples " + samples +
                       " --metrics sl,mae,wd,mmd_wd --out " + report);
  // mae needs equal-length lists: 10 vs 20 -> usage error.
  CHECK(r.exit_code == 4);
  // sl and mmd_* compare distributions, so unequal list lengths are fine there.
  r = run_cli(tmp, "evaluate --data " + data + " --samples " + samples +
                       " --metrics sl,mmd_wd --out " + report);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  {
    const auto rows = read_csv(report);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"metric", "value", "n_a", "n_b", "bandwidth",
                                              "seed"});
    CHECK(rows[1][0] == "sl");
    CHECK(rows[1][2] == "10");
    CHECK(rows[1][3] == "20");
    CHECK(std::stod(rows[2][4]) > 0.0);  // mmd_wd reports its bandwidth
  }
  const std::string self_report = tmp.file("self.csv");
  r = run_cli(tmp, "evaluate --data " + data + " --samples " + data +
                       " --metrics sl,mae,cd,wd,mmd_wd,mmd_cd --out " + self_report);
  // cd needs an ordered axis; homogeneous data has none.
  CHECK(r.exit_code == 4);
  CHECK(r.err.find("class=domain") != std::string::npos);
  r = run_cli(tmp, "evaluate --data " + data + " --samples " + data +
                       " --metrics sl,mae,wd,mmd_wd --out " + self_report);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  {
    const auto rows = read_csv(self_report);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      CHECK(std::stod(rows[i][1]) == 0.0);  // every self-metric vanishes
    }
  }
  // Model-driven evaluation generates --num samples on the fly.
  const std::string gen_report = tmp.file("gen.csv");
  r = run_cli(tmp, "evaluate --data " + data + " --model " + model +
                       " --num 5 --seed 9 --metrics sl --out " + gen_report);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  {
    const auto rows = read_csv(gen_report);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1][2] == "5");
  }

  // --- benchmark
  const std::string bench = tmp.file("bench.csv");
  r = run_cli(tmp, "benchmark --model " + model + " --sizes 5,10 --runs 3 --per-run 1 --out " +
                       bench);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  {
    const auto rows = read_csv(bench);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"size", "median_seconds"});
    CHECK(rows[1][0] == "5");
    CHECK(rows[2][0] == "10");
    CHECK(std::stod(rows[1][1]) >= 0.0);
  }
}

TEST_CASE("train honors config files with flag precedence") {
  TempDir tmp;
  const std::string data = tmp.file("data.jsonl");
  REQUIRE(run_cli(tmp, "datagen --kind homogeneous_poisson --rate 5 --num 10 --seed 2 --out " +
                           data).exit_code == 0);
  const std::string cfg = tmp.file("train.cfg");
  spit(cfg,
       "# comment line\n"
       "epochs_max = 3\n"
       "batch_size = 5\n"
       "eval_every = 2  # trailing comment\n"
       "eval_samples_typo_guard = keep parsing honest\n");
  // Unknown key -> usage error with the line number.
  auto r = run_cli(tmp, "train --data " + data + " --val " + data + " --out " + tmp.file("m.json") +
                            " --config " + cfg + " --steps 6 --d-model 8 --heads 2 --blocks 1"
                            " --ffn-hidden 8 --components 2 --eval-samples 4");
  CHECK(r.exit_code == 4);
  CHECK(r.err.find(":5:") != std::string::npos);

  spit(cfg,
       "epochs_max = 3\n"
       "batch_size = 5\n"
       "eval_every = 2\n");
  const std::string hist = tmp.file("h.csv");
  r = run_cli(tmp, "train --data " + data + " --val " + data + " --out " + tmp.file("m.json") +
                       " --history " + hist + " --config " + cfg +
                       " --steps 6 --d-model 8 --heads 2 --blocks 1 --ffn-hidden 8"
                       " --components 2 --eval-samples 4 --epochs 4");
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  // --epochs 4 on the command line beats epochs_max = 3 from the file.
  CHECK(read_csv(hist).size() == 5);
}

TEST_CASE("error reporting and exit codes") {
  TempDir tmp;
  auto r = run_cli(tmp, "datagen --kind homogeneous --out " + tmp.file("x.jsonl"));
  CHECK(r.exit_code == 4);
  CHECK(r.err.find("class=usage") != std::string::npos);

  r = run_cli(tmp, "train --data " + tmp.file("missing.jsonl") + " --val " +
                       tmp.file("missing.jsonl") + " --out " + tmp.file("m.json"));
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("class=io") != std::string::npos);

  r = run_cli(tmp, "datagen --kind inhomogeneous_poisson --out " + tmp.file("x.jsonl"));
  CHECK(r.exit_code == 4);  // missing --bump

  r = run_cli(tmp, "datagen --kind hawkes_st --mu 1 --alpha 2 --beta 1 --out " +
                       tmp.file("x.jsonl"));
  CHECK(r.exit_code == 4);  // unstable cascade

  r = run_cli(tmp, "nonsense-subcommand");
  CHECK(r.exit_code == 4);

  r = run_cli(tmp, "sample --model " + tmp.file("missing.json") + " --out " + tmp.file("s.jsonl"));
  CHECK(r.exit_code == 2);

  r = run_cli(tmp, "--help");
  CHECK(r.exit_code == 0);

  // Unknown evaluate metric.
  const std::string data = tmp.file("d.jsonl");
  REQUIRE(run_cli(tmp, "datagen --kind homogeneous_poisson --rate 4 --num 4 --seed 1 --out " +
                           data).exit_code == 0);
  r = run_cli(tmp, "evaluate --data " + data + " --samples " + data + " --metrics frobnicate"
                       " --out " + tmp.file("r.csv"));
  CHECK(r.exit_code == 4);
  CHECK(r.err.find("frobnicate") != std::string::npos);

  // Both --samples and --model is ambiguous.
  r = run_cli(tmp, "evaluate --data " + data + " --samples " + data + " --model x --out " +
                       tmp.file("r.csv"));
  CHECK(r.exit_code == 4);
}

TEST_CASE("datagen supports the remaining synthetic kinds end to end") {
  TempDir tmp;
  const std::string bumps = tmp.file("bumps.jsonl");
  auto r = run_cli(tmp, "datagen --kind inhomogeneous_poisson --num 5 --seed 7"
                            " --bump 0.25,0.25,0.08,60 --bump 0.75,0.75,0.08,60 --out " + bumps);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  {
    auto [dom, sets] = load_dataset(bumps);
    CHECK(sets.size() == 5);
    CHECK(dom->dim() == 2);
  }
  const std::string pin = tmp.file("pin.jsonl");
  r = run_cli(tmp, "datagen --kind pinwheel_hawkes --num 3 --seed 7 --mu 2 --alpha 0.3 --beta 1"
                       " --upper 4 1 1 --lower 0 -1 -1 --out " + pin);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  {
    auto [dom, sets] = load_dataset(pin);
    CHECK(dom->dim() == 3);
    CHECK(dom->ordered_axis() == std::optional<int>(0));
    CHECK(sets.size() == 3);
  }
  const std::string hawkes = tmp.file("hawkes.jsonl");
  r = run_cli(tmp, "datagen --kind hawkes_st --num 4 --seed 7 --mu 2 --alpha 0.5 --beta 1"
                       " --kernel-width 0.1 --upper 5 1 --lower 0 -1 --workers 2 --out " + hawkes);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  {
    auto [dom, sets] = load_dataset(hawkes);
    CHECK(sets.size() == 4);
    CHECK(dom->ordered_axis() == std::optional<int>(0));
  }
}

TEST_SUITE_END();
