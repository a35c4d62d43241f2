#include <unistd.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "ppdiff/dataset_io.hpp"
#include "ppdiff/datagen.hpp"
#include "ppdiff/errors.hpp"
#include "ppdiff/model_io.hpp"
#include "ppdiff/svg.hpp"
#include "support.hpp"

using namespace ppdiff;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("ppdiff_io_test_" + std::to_string(::getpid()) + "_" +
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

DomainPtr odd_domain() {
  // Irrational-ish bounds so raw doubles exercise the full mantissa.
  return std::make_shared<Domain>(std::vector<double>{-1.25, 0.1},
                                  std::vector<double>{3.75, 7.3}, 1);
}

std::vector<PointSet> awkward_sets(const DomainPtr& dom) {
  Rng rng(11);
  std::vector<PointSet> sets;
  for (int i = 0; i < 5; ++i) {
    std::vector<double> flat;
    const std::size_t n = i == 2 ? 0 : 1 + rng.uniform_int(6);  // include an empty record
    for (std::size_t j = 0; j < n; ++j) {
      flat.push_back(rng.uniform(-1.25, 3.75));
      flat.push_back(rng.uniform(0.1, 7.3));
    }
    sets.push_back(PointSet::from_raw_flat(dom, std::move(flat)));
  }
  return sets;
}

bool same_bits(const PointSet& a, const PointSet& b) {
  return a.size() == b.size() &&
         (a.size() == 0 || std::memcmp(a.raw_flat().data(), b.raw_flat().data(),
                                       a.raw_flat().size() * sizeof(double)) == 0);
}

}  // namespace

TEST_SUITE_BEGIN("io");

TEST_CASE("dataset save/load round-trips bitwise") {
  TempDir tmp;
  auto dom = odd_domain();
  auto sets = awkward_sets(dom);
  const std::string path = tmp.file("data.jsonl");
  save_dataset(path, dom, sets);
  auto [dom2, sets2] = load_dataset(path);
  CHECK(*dom2 == *dom);
  REQUIRE(sets2.size() == sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) CHECK(same_bits(sets[i], sets2[i]));
  // Saving the loaded copy reproduces the file byte for byte.
  const std::string path2 = tmp.file("data2.jsonl");
  save_dataset(path2, dom2, sets2);
  CHECK(slurp(path) == slurp(path2));
  // Header first, one record per set.
  std::istringstream lines(slurp(path));
  std::string line;
  std::size_t count = 0;
  while (std::getline(lines, line)) ++count;
  CHECK(count == sets.size() + 1);
}

TEST_CASE("dataset loading reports precise errors") {
  TempDir tmp;
  const std::string path = tmp.file("bad.jsonl");

  CHECK_THROWS_AS(load_dataset(tmp.file("missing.jsonl")), IoError);

  spit(path, "");
  CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("empty file"), IoError);

  spit(path, "{not json\n");
  CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains(":1:"), IoError);

  spit(path, R"({"dim": "two", "lower": [0], "upper": [1], "ordered_axis": null})" "\n");
  CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("dim"), IoError);

  spit(path, R"({"dim": 2, "lower": [0], "upper": [1, 2], "ordered_axis": null})" "\n");
  CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("inconsistent"), IoError);

  spit(path, R"({"dim": 1, "lower": [0], "upper": [1], "ordered_axis": 0.5})" "\n");
  CHECK_THROWS_AS(load_dataset(path), IoError);

  const std::string header = R"({"dim": 1, "lower": [0], "upper": [1], "ordered_axis": null})";
  spit(path, header + "\n" + R"({"nope": 1})" + "\n");
  CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("points"), IoError);

  spit(path, header + "\n" + R"({"points": [[0.5], ["x"]]})" + "\n");
  CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("non-numeric"), IoError);

  spit(path, header + "\n" + R"({"points": [[0.5, 0.5]]})" + "\n");
  CHECK_THROWS_AS(load_dataset(path), IoError);  // wrong point dimension

  spit(path, header + "\n" + R"({"points": [[2.5]]})" + "\n");
  CHECK_THROWS_AS(load_dataset(path), IoError);  // outside the domain

  // The failing line number is part of the message.
  spit(path, header + "\n" + R"({"points": [[0.5]]})" + "\n" + "broken\n");
  CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains(":3:"), IoError);
}

TEST_CASE("mask files load as box unions") {
  TempDir tmp;
  auto dom = std::make_shared<Domain>(std::vector<double>{0.0, 0.0},
                                      std::vector<double>{10.0, 10.0});
  const std::string path = tmp.file("mask.json");
  spit(path, R"([{"lower": [0, 0], "upper": [5, 10]}, {"lower": [8, 8], "upper": [9, 9]}])");
  Mask m = load_mask(path, dom);
  // Normalized probe points.
  const std::vector<double> inside = {-0.5, 0.0};   // raw (2.5, 5)
  const std::vector<double> outside = {0.2, 0.0};   // raw (6, 5)
  const std::vector<double> in_second = {0.7, 0.7}; // raw (8.5, 8.5)
  CHECK(m(inside));
  CHECK_FALSE(m(outside));
  CHECK(m(in_second));
  Mask inv = load_mask(path, dom, true);
  CHECK_FALSE(inv(inside));
  CHECK(inv(outside));

  spit(path, R"({"lower": [0]})");
  CHECK_THROWS_WITH_AS(load_mask(path, dom), doctest::Contains("array"), IoError);
  spit(path, R"([42])");
  CHECK_THROWS_AS(load_mask(path, dom), IoError);
  CHECK_THROWS_AS(load_mask(tmp.file("nope.json"), dom), IoError);
}

TEST_CASE("model save/load round-trips bitwise") {
  TempDir tmp;
  auto dom = odd_domain();
  DiffusionSchedule sched =
      make_schedule(16, ScheduleShape::kCosine, 9.0, dom->normalized_volume());
  NeuralDenoiser model({.dim = 2, .t_max = 16, .d_model = 8, .heads = 2, .blocks = 2,
                        .ffn_hidden = 12, .mixture_components = 3, .n_max = 10},
                       123);
  // Nudge weights off their init so the file carries arbitrary doubles.
  {
    PointSet x0 = PointSet::from_raw(dom, {{0.0, 1.0}, {1.0, 2.0}, {2.0, 3.0}});
    Rng rng(5);
    LabeledState st = forward_marginal(x0, 7, sched, rng);
    nn::GradMap gm;
    nn::backward(model.loss(x0, st).graph_total, &gm);
    nn::adam_step(model.params(), gm, nn::AdamConfig{});
  }
  const std::string path = tmp.file("model.json");
  save_model(path, model, sched, dom);
  ModelBundle loaded = load_model(path);
  CHECK(*loaded.domain == *dom);
  CHECK(loaded.schedule.steps() == 16);
  for (int t = 1; t <= 16; ++t) {
    CHECK(loaded.schedule.alpha_bar(t) == sched.alpha_bar(t));
    CHECK(loaded.schedule.beta_bar(t) == sched.beta_bar(t));
  }
  CHECK(loaded.schedule.noise_rate() == sched.noise_rate());
  CHECK(loaded.model->config().d_model == 8);
  CHECK(loaded.model->params().snapshot_values() == model.params().snapshot_values());

  // Identical predictions on a fresh latent.
  PointSet xt = PointSet::from_raw(dom, {{0.5, 0.7}, {3.0, 6.0}});
  const DenoiserOutput a = model.predict(xt, 3);
  const DenoiserOutput b = loaded.model->predict(xt, 3);
  CHECK(a.keep_prob == b.keep_prob);
  CHECK(a.count_logits == b.count_logits);
  CHECK(a.mix_weights == b.mix_weights);
  CHECK(a.mix_means == b.mix_means);
  CHECK(a.mix_vars == b.mix_vars);

  // Re-saving the loaded model reproduces the file byte for byte.
  const std::string path2 = tmp.file("model2.json");
  save_model(path2, *loaded.model, loaded.schedule, loaded.domain);
  CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("model loading validates the file") {
  TempDir tmp;
  auto dom = std::make_shared<Domain>(std::vector<double>{0.0}, std::vector<double>{1.0});
  DiffusionSchedule sched = make_schedule(4, ScheduleShape::kLinear, 5.0, dom->normalized_volume());
  NeuralDenoiser model({.dim = 1, .t_max = 4, .d_model = 4, .heads = 1, .blocks = 1,
                        .ffn_hidden = 4, .mixture_components = 1, .n_max = 4},
                       9);
  const std::string path = tmp.file("model.json");
  save_model(path, model, sched, dom);

  CHECK_THROWS_AS(load_model(tmp.file("missing.json")), IoError);

  spit(tmp.file("garbage.json"), "not json at all");
  CHECK_THROWS_WITH_AS(load_model(tmp.file("garbage.json")), doctest::Contains("invalid JSON"),
                       IoError);

  spit(tmp.file("fmt.json"), R"({"format": "something-else"})");
  CHECK_THROWS_WITH_AS(load_model(tmp.file("fmt.json")), doctest::Contains("ppdiff-model-v1"),
                       IoError);

  // Drop one parameter tensor.
  {
    const std::string text = slurp(path);
    const auto pos = text.find("\"token_proj.b\"");
    REQUIRE(pos != std::string::npos);
    // Rename it to an unknown key: triggers missing + unknown both; missing fires first.
    std::string mangled = text;
    mangled.replace(pos, 14, "\"token_proj.c\"");
    spit(tmp.file("mangled.json"), mangled);
    CHECK_THROWS_WITH_AS(load_model(tmp.file("mangled.json")),
                         doctest::Contains("missing parameter"), IoError);
  }
}

TEST_CASE("scatter svg output") {
  TempDir tmp;
  auto dom = std::make_shared<Domain>(std::vector<double>{0.0, 0.0},
                                      std::vector<double>{4.0, 2.0}, 0);
  PointSet pts = PointSet::from_raw(dom, {{1.0, 1.0}, {3.0, 0.5}});
  const std::string path = tmp.file("plot.svg");
  write_scatter_svg(path, pts);
  const std::string body = slurp(path);
  CHECK(body.find("<svg") != std::string::npos);
  CHECK(body.find("</svg>") != std::string::npos);
  // One circle per point.
  std::size_t circles = 0;
  for (std::size_t at = body.find("<circle"); at != std::string::npos;
       at = body.find("<circle", at + 1)) {
    ++circles;
  }
  CHECK(circles == 2);

  // Mask boxes render as shaded rectangles.
  Mask mask = Mask::from_boxes(dom, {{{0.0, 0.0}, {2.0, 2.0}}});
  const std::string masked_path = tmp.file("masked.svg");
  write_scatter_svg(masked_path, pts, &mask);
  const std::string masked = slurp(masked_path);
  CHECK(masked.find("<rect") != std::string::npos);

  // 1D sets plot on a line without crashing.
  auto line = std::make_shared<Domain>(std::vector<double>{0.0}, std::vector<double>{1.0}, 0);
  PointSet one = PointSet::from_raw(line, {{0.25}, {0.5}});
  write_scatter_svg(tmp.file("line.svg"), one);
  CHECK(slurp(tmp.file("line.svg")).find("<circle") != std::string::npos);

  // Empty sets still produce a valid document.
  write_scatter_svg(tmp.file("empty.svg"), PointSet(dom));
  CHECK(slurp(tmp.file("empty.svg")).find("</svg>") != std::string::npos);
}

TEST_CASE("dataset round trip through the synthetic generators") {
  TempDir tmp;
  auto dom = std::make_shared<Domain>(std::vector<double>{0.0, -1.0},
                                      std::vector<double>{6.0, 1.0}, 0);
  SyntheticSpec spec;
  spec.kind = SyntheticKind::kHawkesSt;
  spec.mu = 1.5;
  spec.alpha_h = 0.4;
  spec.beta_h = 1.0;
  spec.num_instances = 12;
  spec.seed = 3;
  const auto sets = gen_dataset(spec, dom, 1);
  const std::string path = tmp.file("hawkes.jsonl");
  save_dataset(path, dom, sets);
  auto [dom2, sets2] = load_dataset(path);
  REQUIRE(sets2.size() == sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) CHECK(same_bits(sets[i], sets2[i]));
  CHECK(dom2->ordered_axis() == std::optional<int>(0));
}

TEST_SUITE_END();
