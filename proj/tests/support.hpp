#pragma once

// Statistical helpers and brute-force oracles shared by the test suites. The
// oracles are deliberately naive (exhaustive enumeration, plain summation) so
// they cannot share bugs with the library implementations they check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppdiff/layers.hpp"
#include "ppdiff/tensor.hpp"

namespace tsup {

// Regularized upper incomplete gamma Q(a, x), by series for x < a + 1 and
// Lentz continued fraction otherwise.
inline double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - gln);
  }
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - gln) * h;
}

inline double chi2_sf(double stat, int dof) { return gamma_q(dof / 2.0, stat / 2.0); }

// Pearson goodness-of-fit p-value of observed counts against cell
// probabilities. Adjacent cells are pooled until every expected count is at
// least 5; any tail remainder joins the last pooled cell.
inline double chi2_gof_pvalue(const std::vector<long>& observed, const std::vector<double>& probs) {
  if (observed.size() != probs.size() || observed.empty()) {
    throw std::invalid_argument("chi2_gof_pvalue: size mismatch");
  }
  double n = 0.0;
  for (long o : observed) n += static_cast<double>(o);
  std::vector<double> obs_pooled, exp_pooled;
  double o_acc = 0.0, e_acc = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    o_acc += static_cast<double>(observed[i]);
    e_acc += n * probs[i];
    if (e_acc >= 5.0) {
      obs_pooled.push_back(o_acc);
      exp_pooled.push_back(e_acc);
      o_acc = e_acc = 0.0;
    }
  }
  if (e_acc > 0.0 || o_acc > 0.0) {
    if (exp_pooled.empty()) {
      obs_pooled.push_back(o_acc);
      exp_pooled.push_back(e_acc);
    } else {
      obs_pooled.back() += o_acc;
      exp_pooled.back() += e_acc;
    }
  }
  if (obs_pooled.size() < 2) return 1.0;
  double stat = 0.0;
  for (std::size_t i = 0; i < obs_pooled.size(); ++i) {
    const double d = obs_pooled[i] - exp_pooled[i];
    stat += d * d / exp_pooled[i];
  }
  return chi2_sf(stat, static_cast<int>(obs_pooled.size()) - 1);
}

inline std::vector<double> binomial_probs(int n, double p) {
  std::vector<double> out(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) {
    const double lp = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                      (k > 0 ? k * std::log(p) : 0.0) +
                      (n - k > 0 ? (n - k) * std::log1p(-p) : 0.0);
    out[static_cast<std::size_t>(k)] = std::exp(lp);
  }
  return out;
}

// Poisson cell probabilities for counts 0..kmax-1 plus the upper tail in the
// last cell.
inline std::vector<double> poisson_probs_with_tail(double lambda, int kmax) {
  std::vector<double> out(static_cast<std::size_t>(kmax) + 1, 0.0);
  double cum = 0.0;
  for (int k = 0; k < kmax; ++k) {
    const double lp = -lambda + k * std::log(lambda) - std::lgamma(k + 1.0);
    out[static_cast<std::size_t>(k)] = std::exp(lp);
    cum += out[static_cast<std::size_t>(k)];
  }
  out[static_cast<std::size_t>(kmax)] = std::max(0.0, 1.0 - cum);
  return out;
}

// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

inline double ks_critical(std::size_t n, std::size_t m, double alpha) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double dn = static_cast<double>(n), dm = static_cast<double>(m);
  return c * std::sqrt((dn + dm) / (dn * dm));
}

// Acceptance threshold for the biased (V-statistic) MMD with a kernel bounded
// by 1, at significance alpha, m the smaller sample count.
inline double mmd_threshold(std::size_t m, double alpha) {
  return std::sqrt(2.0 / static_cast<double>(m)) *
         (1.0 + std::sqrt(2.0 * std::log(1.0 / alpha)));
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe r;
  const double n = static_cast<double>(xs.size());
  for (double v : xs) r.mean += v;
  r.mean /= n;
  double ss = 0.0;
  for (double v : xs) ss += (v - r.mean) * (v - r.mean);
  r.se = std::sqrt(ss / (n - 1.0) / n);
  return r;
}

// Exhaustive minimum-cost transport over integral plans: cost is row-major
// n x m, supply/demand are positive integers with equal totals. Exponential
// in the instance size; callers keep n, m and the masses tiny.
inline double brute_force_transport(int n, int m, const std::vector<double>& cost,
                                    std::vector<long> supply, std::vector<long> demand) {
  double best = std::numeric_limits<double>::infinity();
  std::function<void(int, int, double)> rec = [&](int i, int j, double acc) {
    if (acc >= best) return;
    if (i == n) {
      best = acc;
      return;
    }
    const double c = cost[static_cast<std::size_t>(i) * m + j];
    if (j == m - 1) {
      const long f = supply[static_cast<std::size_t>(i)];
      if (f > demand[static_cast<std::size_t>(j)]) return;
      supply[static_cast<std::size_t>(i)] -= f;
      demand[static_cast<std::size_t>(j)] -= f;
      rec(i + 1, 0, acc + f * c);
      supply[static_cast<std::size_t>(i)] += f;
      demand[static_cast<std::size_t>(j)] += f;
      return;
    }
    const long hi = std::min(supply[static_cast<std::size_t>(i)], demand[static_cast<std::size_t>(j)]);
    for (long f = 0; f <= hi; ++f) {
      supply[static_cast<std::size_t>(i)] -= f;
      demand[static_cast<std::size_t>(j)] -= f;
      rec(i, j + 1, acc + f * c);
      supply[static_cast<std::size_t>(i)] += f;
      demand[static_cast<std::size_t>(j)] += f;
    }
  };
  rec(0, 0, 0.0);
  return best;
}

struct FdResult {
  bool ok = true;
  int checked = 0;
  int failed = 0;
  double worst_abs_diff = 0.0;
  std::string worst_param;
};

// Central finite differences of `value()` against the analytic gradients in
// `grads`, sweeping every entry of every named parameter in `store`. The
// graph must be rebuilt inside value() so perturbed parameter values are
// picked up. Pass condition per entry: |fd - g| <= rtol*max(|fd|,|g|) + atol.
inline FdResult fd_check(ppdiff::nn::ParameterStore& store,
                         const std::function<double()>& value,
                         const ppdiff::nn::GradMap& grads, double h = 1e-5,
                         double rtol = 1e-4, double atol = 1e-7) {
  FdResult res;
  for (const auto& [name, param] : store.all()) {
    ppdiff::nn::Tensor t = param;
    auto& vals = t.mutable_values();
    const auto it = grads.find(name);
    for (std::size_t k = 0; k < vals.size(); ++k) {
      const double keep = vals[k];
      vals[k] = keep + h;
      const double fp = value();
      vals[k] = keep - h;
      const double fm = value();
      vals[k] = keep;
      const double fd = (fp - fm) / (2.0 * h);
      const double g = it == grads.end() ? 0.0 : it->second.at(k);
      const double diff = std::fabs(fd - g);
      ++res.checked;
      if (diff > rtol * std::max(std::fabs(fd), std::fabs(g)) + atol) {
        ++res.failed;
        res.ok = false;
        if (diff > res.worst_abs_diff) {
          res.worst_abs_diff = diff;
          res.worst_param = name + "[" + std::to_string(k) + "]";
        }
      }
    }
  }
  return res;
}

}  // namespace tsup
