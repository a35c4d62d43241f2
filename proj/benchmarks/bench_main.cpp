// Microbenchmarks for the library hot paths: the exact transport solver, the
// encoder forward pass, kernel-statistic evaluation and the full reverse
// sampling chain at several target sizes.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <memory>
#include <vector>

#include "ppdiff/denoiser.hpp"
#include "ppdiff/metrics.hpp"
#include "ppdiff/point_set.hpp"
#include "ppdiff/rng.hpp"
#include "ppdiff/sampling.hpp"
#include "ppdiff/schedule.hpp"

namespace {

using namespace ppdiff;

DomainPtr unit_box() {
  return std::make_shared<const Domain>(std::vector<double>{0.0, 0.0},
                                        std::vector<double>{1.0, 1.0});
}

PointSet random_set(const DomainPtr& dom, Rng& rng, std::size_t n) {
  std::vector<double> flat;
  flat.reserve(2 * n);
  for (std::size_t i = 0; i < 2 * n; ++i) flat.push_back(rng.uniform());
  return PointSet::from_raw_flat(dom, flat);
}

DenoiserConfig small_config(int n_max) {
  DenoiserConfig cfg;
  cfg.dim = 2;
  cfg.t_max = 100;
  cfg.d_model = 32;
  cfg.heads = 4;
  cfg.blocks = 2;
  cfg.ffn_hidden = 32;
  cfg.mixture_components = 8;
  cfg.n_max = n_max;
  return cfg;
}

void BM_TransportSolve(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto dom = unit_box();
  Rng rng(1);
  const PointSet x = random_set(dom, rng, n);
  const PointSet y = random_set(dom, rng, n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ot_wasserstein(x, y));
  }
}
BENCHMARK(BM_TransportSolve)->Arg(4)->Arg(16)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_DenoiserPredict(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto dom = unit_box();
  const NeuralDenoiser model(small_config(64), 2);
  Rng rng(3);
  const PointSet xt = random_set(dom, rng, n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.predict(xt, 50));
  }
}
BENCHMARK(BM_DenoiserPredict)->Arg(8)->Arg(32)->Arg(128)->Arg(512)->Unit(benchmark::kMicrosecond);

void BM_MmdWasserstein(benchmark::State& state) {
  const auto lists = static_cast<std::size_t>(state.range(0));
  const auto dom = unit_box();
  Rng rng(5);
  std::vector<PointSet> a, b;
  for (std::size_t i = 0; i < lists; ++i) {
    a.push_back(random_set(dom, rng, 8 + rng.uniform_int(8)));
    b.push_back(random_set(dom, rng, 8 + rng.uniform_int(8)));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(mmd(a, b, SetDistanceKind::kWasserstein));
  }
}
BENCHMARK(BM_MmdWasserstein)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_SampleChain(benchmark::State& state) {
  const double size = static_cast<double>(state.range(0));
  const auto dom = unit_box();
  const DiffusionSchedule base =
      make_schedule(20, ScheduleShape::kLinear, size, dom->normalized_volume());
  const NeuralDenoiser model(small_config(2 * static_cast<int>(size)), 7);
  std::uint64_t task = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_unconditional(model, base, dom, 11, task++));
  }
}
BENCHMARK(BM_SampleChain)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
