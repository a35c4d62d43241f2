#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ppdiff {

// Deterministic random stream. The engine is std::mt19937_64 (its output
// sequence is fixed by the standard); all distributions are implemented here
// so that draws are bitwise reproducible across standard libraries.
//
// Independent streams are derived from (seed, key...) tuples with a splitmix64
// hash chain. Samplers derive one stream per (seed, task, t) so results do not
// depend on worker count or on how much randomness other steps consumed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform on {0, ..., n-1} via rejection (unbiased).
  std::uint64_t uniform_int(std::uint64_t n);
  bool bernoulli(double p);
  // Box-Muller; one variate per call, no cached state.
  double normal(double mean = 0.0, double sd = 1.0);
  // Exact Poisson sampling; large means are split additively into chunks so
  // the multiplicative method never underflows.
  long poisson(double mean);

 private:
  std::mt19937_64 engine_;
};

// splitmix64 mixing step, also used for hashing keys into stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace ppdiff
