#include "ppdiff/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "ppdiff/errors.hpp"

namespace ppdiff {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kProbClamp = 1e-7;

std::vector<double> softmax_values(const std::vector<double>& logits) {
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

void check_output(const DenoiserOutput& out) {
  if (out.dim < 1 || out.count_logits.empty() || out.mix_weights.empty() ||
      out.mix_means.size() != out.mix_weights.size() * out.dim ||
      out.mix_vars.size() != out.mix_weights.size() * out.dim) {
    throw UsageError("DenoiserOutput: inconsistent field sizes");
  }
}

// Validates that state.retained is the labeled subset of x0 it claims to be
// and returns the indices of x0 points absent from the state.
std::vector<std::size_t> thinned_indices(const PointSet& x0, const LabeledState& state) {
  if (state.retained_origin.size() != state.retained.size()) {
    throw UsageError("loss: retained_origin/retained size mismatch");
  }
  const int d = x0.dim();
  const std::size_t bytes = static_cast<std::size_t>(d) * sizeof(double);
  std::vector<bool> present(x0.size(), false);
  for (std::size_t i = 0; i < state.retained.size(); ++i) {
    const std::size_t o = state.retained_origin[i];
    if (o >= x0.size() ||
        std::memcmp(state.retained.raw_point(i).data(), x0.raw_point(o).data(), bytes) != 0) {
      throw UsageError("loss: state.retained is not a labeled subset of x0");
    }
    present[o] = true;
  }
  std::vector<std::size_t> missing;
  for (std::size_t o = 0; o < x0.size(); ++o) {
    if (!present[o]) missing.push_back(o);
  }
  return missing;
}

}  // namespace

double mixture_log_prob(const DenoiserOutput& out, std::span<const double> x) {
  check_output(out);
  if (static_cast<int>(x.size()) != out.dim) {
    throw UsageError("mixture_log_prob: point dimension mismatch");
  }
  const int K = out.components();
  const int d = out.dim;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(K);
  for (int k = 0; k < K; ++k) {
    double lp = std::log(std::max(out.mix_weights[k], 1e-300));
    for (int j = 0; j < d; ++j) {
      const double v = out.mix_vars[static_cast<std::size_t>(k) * d + j];
      const double diff = x[j] - out.mix_means[static_cast<std::size_t>(k) * d + j];
      lp -= 0.5 * (kLog2Pi + std::log(v) + diff * diff / v);
    }
    terms[k] = lp;
    best = std::max(best, lp);
  }
  double sum = 0.0;
  for (double v : terms) sum += std::exp(v - best);
  return best + std::log(sum);
}

void sample_mixture_point(const DenoiserOutput& out, Rng& rng, double* coords) {
  const int d = out.dim;
  const int K = out.components();
  for (int attempt = 0; attempt < 16; ++attempt) {
    // Component by weight, then a diagonal Gaussian draw.
    const double u = rng.uniform();
    double acc = 0.0;
    int k = K - 1;
    for (int i = 0; i < K; ++i) {
      acc += out.mix_weights[i];
      if (u < acc) {
        k = i;
        break;
      }
    }
    bool inside = true;
    for (int j = 0; j < d; ++j) {
      const double mu = out.mix_means[static_cast<std::size_t>(k) * d + j];
      const double sd = std::sqrt(out.mix_vars[static_cast<std::size_t>(k) * d + j]);
      coords[j] = rng.normal(mu, sd);
      if (coords[j] < -1.0 || coords[j] > 1.0) inside = false;
    }
    if (inside) return;
  }
  for (int j = 0; j < d; ++j) coords[j] = std::clamp(coords[j], -1.0, 1.0);
}

X0Hat Denoiser::sample_x0_hat(const PointSet& xt, int t, Rng& rng) const {
  const DenoiserOutput out = predict(xt, t);
  check_output(out);
  if (out.keep_prob.size() != xt.size()) {
    throw UsageError("sample_x0_hat: keep_prob size mismatch");
  }
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < xt.size(); ++i) {
    if (rng.bernoulli(out.keep_prob[i])) kept.push_back(i);
  }
  const std::vector<double> count_probs = softmax_values(out.count_logits);
  const double u = rng.uniform();
  double acc = 0.0;
  int m = static_cast<int>(count_probs.size()) - 1;
  for (std::size_t i = 0; i < count_probs.size(); ++i) {
    acc += count_probs[i];
    if (u < acc) {
      m = static_cast<int>(i);
      break;
    }
  }
  const int d = out.dim;
  const PointSet kept_set = xt.subset(kept);
  // Bitwise-coincident draws are rejected by set construction; this is a
  // probability-zero event under the continuous mixture, but redraw rather
  // than abort if it ever fires.
  for (int retry = 0;; ++retry) {
    try {
      std::vector<double> flat(static_cast<std::size_t>(m) * d);
      for (int i = 0; i < m; ++i) {
        sample_mixture_point(out, rng, flat.data() + static_cast<std::size_t>(i) * d);
      }
      X0Hat result;
      result.x0_hat = superpose(kept_set, PointSet::from_normalized_flat(xt.domain(), flat));
      result.kept_latent_indices = std::move(kept);
      return result;
    } catch (const UsageError&) {
      if (retry >= 4) throw;
    }
  }
}

LossBreakdown loss_from_output(const DenoiserOutput& out, const PointSet& x0,
                               const LabeledState& state) {
  check_output(out);
  const std::vector<std::size_t> missing = thinned_indices(x0, state);
  const std::size_t n = state.total_count();
  if (out.keep_prob.size() != n) throw UsageError("loss_from_output: keep_prob size mismatch");

  LossBreakdown b;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::clamp(out.keep_prob[i], kProbClamp, 1.0 - kProbClamp);
    const bool label = i < state.retained.size();
    b.bce -= label ? std::log(p) : std::log(1.0 - p);
  }
  const int m = static_cast<int>(missing.size());
  if (m > out.n_max()) {
    throw UsageError("loss_from_output: thinned count exceeds n_max; increase the count head support");
  }
  const std::vector<double> cp = softmax_values(out.count_logits);
  b.nll -= std::log(std::max(cp[m], 1e-300));
  for (std::size_t o : missing) b.nll -= mixture_log_prob(out, x0.point(o));
  b.total = b.bce + b.nll;
  return b;
}

NeuralDenoiser::NeuralDenoiser(DenoiserConfig cfg, std::uint64_t init_seed) : cfg_(cfg) {
  if (cfg_.dim < 1 || cfg_.t_max < 2 || cfg_.d_model < 2 || cfg_.d_model % 2 != 0 ||
      cfg_.heads < 1 || cfg_.d_model % cfg_.heads != 0 || cfg_.blocks < 1 ||
      cfg_.mixture_components < 1 || cfg_.n_max < 1 || !(cfg_.var_floor > 0.0)) {
    throw UsageError("NeuralDenoiser: invalid configuration");
  }
  Rng rng = Rng::derive(init_seed, {0x70617261u});
  const int dm = cfg_.d_model;
  token_proj_ = nn::Linear(store_, "token_proj", cfg_.dim + 2 * dm, dm, rng);
  encoder_ = nn::AttentionEncoder(store_, "enc", dm, cfg_.heads, cfg_.blocks, cfg_.ffn_hidden, rng);
  classifier_ = nn::Mlp(store_, "cls", {4 * dm, dm, dm, 1}, rng, true);
  count_head_ = nn::Mlp(store_, "count", {3 * dm, dm, cfg_.n_max + 1}, rng, true);
  mixture_head_ = nn::Mlp(
      store_, "mix", {3 * dm, dm, cfg_.mixture_components * (1 + 2 * cfg_.dim)}, rng, true);
}

NeuralDenoiser::GraphOutput NeuralDenoiser::forward_graph(const PointSet& xt, int t) const {
  if (t < 0 || t > cfg_.t_max) throw UsageError("NeuralDenoiser: t out of range");
  if (xt.dim() != cfg_.dim) throw UsageError("NeuralDenoiser: point dimension mismatch");
  const int n = static_cast<int>(xt.size());
  const int dm = cfg_.d_model;
  const nn::Tensor e_n = nn::sinusoidal_embed(n, dm);
  const nn::Tensor e_t = nn::sinusoidal_embed(t, dm);

  nn::Tensor enc, pooled;
  if (n > 0) {
    const nn::Tensor coords = nn::Tensor::constant(n, cfg_.dim, xt.norm_flat());
    const nn::Tensor tokens = token_proj_.forward(nn::concat_cols(
        nn::concat_cols(coords, nn::repeat_rows(e_n, n)), nn::repeat_rows(e_t, n)));
    enc = encoder_.forward(tokens);
    pooled = nn::col_mean(enc);
  } else {
    enc = nn::Tensor::zeros(0, dm);
    pooled = nn::Tensor::zeros(1, dm);
  }
  const nn::Tensor z = nn::concat_cols(nn::concat_cols(pooled, e_n), e_t);

  GraphOutput g;
  if (n > 0) {
    const nn::Tensor cls_in = nn::concat_cols(
        nn::concat_cols(enc, nn::repeat_rows(pooled, n)),
        nn::concat_cols(nn::repeat_rows(e_n, n), nn::repeat_rows(e_t, n)));
    g.keep_logits = classifier_.forward(cls_in);
  } else {
    g.keep_logits = nn::Tensor::zeros(0, 1);
  }
  g.count_logits = count_head_.forward(z);
  const nn::Tensor mix = mixture_head_.forward(z);
  const int K = cfg_.mixture_components;
  const int d = cfg_.dim;
  g.mix_w_logits = nn::slice_cols(mix, 0, K);
  g.mix_means = nn::reshape(nn::slice_cols(mix, K, K + K * d), K, d);
  g.mix_vars = nn::add_scalar(
      nn::softplus(nn::reshape(nn::slice_cols(mix, K + K * d, K + 2 * K * d), K, d)),
      cfg_.var_floor);
  return g;
}

DenoiserOutput NeuralDenoiser::predict(const PointSet& xt, int t) const {
  nn::NoGradGuard ng;
  const GraphOutput g = forward_graph(xt, t);
  DenoiserOutput out;
  out.dim = cfg_.dim;
  out.keep_prob.resize(xt.size());
  for (std::size_t i = 0; i < xt.size(); ++i) {
    const double z = g.keep_logits.values()[i];
    out.keep_prob[i] = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  }
  out.count_logits = g.count_logits.values();
  out.mix_weights = softmax_values(g.mix_w_logits.values());
  out.mix_means = g.mix_means.values();
  out.mix_vars = g.mix_vars.values();
  return out;
}

NeuralDenoiser::LossResult NeuralDenoiser::loss(const PointSet& x0,
                                                const LabeledState& state) const {
  using namespace nn;
  const std::vector<std::size_t> missing = thinned_indices(x0, state);
  const int m = static_cast<int>(missing.size());
  if (m > cfg_.n_max) {
    throw UsageError("loss: thinned count exceeds n_max; increase the count head support");
  }
  const PointSet full = state.full();
  const GraphOutput g = forward_graph(full, state.t);

  const int n = static_cast<int>(full.size());
  Tensor bce = Tensor::scalar(0.0);
  if (n > 0) {
    std::vector<double> y(n), yc(n);
    for (int i = 0; i < n; ++i) {
      y[i] = i < static_cast<int>(state.retained.size()) ? 1.0 : 0.0;
      yc[i] = 1.0 - y[i];
    }
    const Tensor labels = Tensor::constant(n, 1, std::move(y));
    const Tensor labels_c = Tensor::constant(n, 1, std::move(yc));
    bce = sum_all(add(mul(labels, softplus(neg(g.keep_logits))),
                      mul(labels_c, softplus(g.keep_logits))));
  }

  Tensor nll = sub(logsumexp_all(g.count_logits), slice_cols(g.count_logits, m, m + 1));
  if (m > 0) {
    const int K = cfg_.mixture_components;
    const int d = cfg_.dim;
    const Tensor log_w =
        add_scalar_t(g.mix_w_logits, neg(logsumexp_all(g.mix_w_logits)));
    const Tensor log_vars = log(g.mix_vars);
    for (std::size_t o : missing) {
      std::vector<double> coords(x0.point(o).begin(), x0.point(o).end());
      const Tensor xrep = repeat_rows(Tensor::constant(1, d, std::move(coords)), K);
      const Tensor diff = sub(xrep, g.mix_means);
      const Tensor quad = div(mul(diff, diff), g.mix_vars);
      const Tensor per_comp =
          scale(row_sum(add(quad, add_scalar(log_vars, kLog2Pi))), -0.5);
      const Tensor ll = logsumexp_all(add(log_w, transpose(per_comp)));
      nll = sub(nll, ll);
    }
  }

  LossResult r;
  r.graph_total = add(bce, nll);
  r.breakdown.bce = bce.scalar_value();
  r.breakdown.nll = nll.scalar_value();
  r.breakdown.total = r.graph_total.scalar_value();
  return r;
}

OracleDenoiser::OracleDenoiser(PointSet x0) : x0_(std::move(x0)) {
  if (!x0_.domain()) throw UsageError("OracleDenoiser: clean set has no domain");
}

bool OracleDenoiser::is_data_point(std::span<const double> raw) const {
  const int d = x0_.dim();
  const std::size_t bytes = static_cast<std::size_t>(d) * sizeof(double);
  for (std::size_t i = 0; i < x0_.size(); ++i) {
    if (std::memcmp(raw.data(), x0_.raw_point(i).data(), bytes) == 0) return true;
  }
  return false;
}

std::vector<std::size_t> OracleDenoiser::missing_indices(const PointSet& xt) const {
  const int d = x0_.dim();
  const std::size_t bytes = static_cast<std::size_t>(d) * sizeof(double);
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < x0_.size(); ++i) {
    bool found = false;
    for (std::size_t j = 0; j < xt.size() && !found; ++j) {
      found = std::memcmp(x0_.raw_point(i).data(), xt.raw_point(j).data(), bytes) == 0;
    }
    if (!found) missing.push_back(i);
  }
  return missing;
}

DenoiserOutput OracleDenoiser::predict(const PointSet& xt, int /*t*/) const {
  const int d = x0_.dim();
  DenoiserOutput out;
  out.dim = d;
  out.keep_prob.resize(xt.size());
  for (std::size_t i = 0; i < xt.size(); ++i) {
    out.keep_prob[i] = is_data_point(xt.raw_point(i)) ? 1.0 : 0.0;
  }
  const std::vector<std::size_t> missing = missing_indices(xt);
  out.count_logits.assign(x0_.size() + 1, 0.0);
  out.count_logits[missing.size()] = 1e4;  // softmax mass 1 in double precision
  const int K = static_cast<int>(std::max<std::size_t>(missing.size(), 1));
  out.mix_weights.assign(K, 1.0 / K);
  out.mix_means.assign(static_cast<std::size_t>(K) * d, 0.0);
  out.mix_vars.assign(static_cast<std::size_t>(K) * d, 1e-4);
  for (std::size_t k = 0; k < missing.size(); ++k) {
    const auto p = x0_.point(missing[k]);
    std::copy(p.begin(), p.end(), out.mix_means.begin() + k * d);
  }
  return out;
}

X0Hat OracleDenoiser::sample_x0_hat(const PointSet& xt, int /*t*/, Rng& /*rng*/) const {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < xt.size(); ++i) {
    if (is_data_point(xt.raw_point(i))) kept.push_back(i);
  }
  const std::vector<std::size_t> missing = missing_indices(xt);
  X0Hat r;
  r.x0_hat = superpose(xt.subset(kept), x0_.subset(missing));
  r.kept_latent_indices = std::move(kept);
  return r;
}

DenoiserOutput OracleDenoiser::predict_checked(const LabeledState& state) const {
  for (std::size_t i = 0; i < state.retained.size(); ++i) {
    if (!is_data_point(state.retained.raw_point(i))) {
      throw UsageError("OracleDenoiser: retained part is not a subset of the clean set");
    }
  }
  return predict(state.full(), state.t);
}

}  // namespace ppdiff
