#include "ppdiff/rng.hpp"

#include <cmath>

#include "ppdiff/errors.hpp"

namespace ppdiff {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng Rng::derive(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t s = splitmix64(seed);
  for (std::uint64_t k : keys) s = splitmix64(s ^ (k + 0x9e3779b97f4a7c15ULL));
  return Rng(s);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::uniform_int(std::uint64_t n) {
  if (n == 0) throw UsageError("uniform_int: n must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

bool Rng::bernoulli(double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return uniform() < p;
}

double Rng::normal(double mean, double sd) {
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  return mean + sd * z;
}

long Rng::poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw UsageError("poisson: mean must be finite and nonnegative");
  }
  long total = 0;
  // Multiplicative (Knuth) method underflows past mean ~700; split additively.
  while (mean > 0.0) {
    const double chunk = mean > 400.0 ? 400.0 : mean;
    mean -= chunk;
    const double threshold = std::exp(-chunk);
    double prod = uniform();
    long k = 0;
    while (prod > threshold) {
      ++k;
      prod *= uniform();
    }
    total += k;
  }
  return total;
}

}  // namespace ppdiff
