#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "ppdiff/layers.hpp"
#include "ppdiff/point_set.hpp"

namespace ppdiff {

// Prediction of the clean set given a latent X_t: per-point survival
// probabilities, a categorical over how many points were thinned away, and a
// diagonal-Gaussian mixture over where they were.
struct DenoiserOutput {
  std::vector<double> keep_prob;     // one per latent point, in [0, 1]
  std::vector<double> count_logits;  // n_max + 1 entries
  std::vector<double> mix_weights;   // K entries, nonnegative, sum to 1
  std::vector<double> mix_means;     // K x dim, row-major, normalized coords
  std::vector<double> mix_vars;      // K x dim, >= var_floor
  int dim = 0;

  int n_max() const { return static_cast<int>(count_logits.size()) - 1; }
  int components() const { return static_cast<int>(mix_weights.size()); }
};

// log density of the mixture at a normalized-coordinate point.
double mixture_log_prob(const DenoiserOutput& out, std::span<const double> x);

// Draw one point from the mixture; draws falling outside [-1,1]^d are
// resampled up to 16 times, then clamped.
void sample_mixture_point(const DenoiserOutput& out, Rng& rng, double* coords);

struct X0Hat {
  PointSet x0_hat;
  // Indices into the latent X_t of the points that were kept; they appear as
  // the first kept_latent_indices.size() points of x0_hat, in the same order.
  std::vector<std::size_t> kept_latent_indices;
};

class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual DenoiserOutput predict(const PointSet& xt, int t) const = 0;
  // Generic draw of a clean-set hypothesis: Bernoulli keeps per latent point,
  // a count from the categorical, fresh points from the mixture.
  virtual X0Hat sample_x0_hat(const PointSet& xt, int t, Rng& rng) const;
};

struct LossBreakdown {
  double total = 0.0;
  double bce = 0.0;  // survival classification term
  double nll = 0.0;  // count + mixture location term
};

// Loss of a prediction against the clean set that produced the latent state,
// evaluated from plain probabilities (clamped to [1e-7, 1 - 1e-7]).
LossBreakdown loss_from_output(const DenoiserOutput& out, const PointSet& x0,
                               const LabeledState& state);

struct DenoiserConfig {
  int dim = 2;
  int t_max = 100;
  int d_model = 32;
  int heads = 4;
  int blocks = 2;
  int ffn_hidden = 32;
  int mixture_components = 16;
  int n_max = 64;
  double var_floor = 1e-4;
};

// Transformer-encoder denoiser. Heads: a 3-layer ReLU MLP per-point survival
// classifier, a 2-layer MLP categorical count head, a 2-layer MLP mixture
// head. Head output layers start at zero, so an untrained model predicts
// keep_prob 1/2, a uniform count categorical and uniform mixture weights.
class NeuralDenoiser : public Denoiser {
 public:
  NeuralDenoiser(DenoiserConfig cfg, std::uint64_t init_seed);

  DenoiserOutput predict(const PointSet& xt, int t) const override;

  struct GraphOutput {
    nn::Tensor keep_logits;   // [n x 1]
    nn::Tensor count_logits;  // [1 x (n_max+1)]
    nn::Tensor mix_w_logits;  // [1 x K]
    nn::Tensor mix_means;     // [K x dim]
    nn::Tensor mix_vars;      // [K x dim]
  };
  // Differentiable forward pass (graph tied to the parameter store).
  GraphOutput forward_graph(const PointSet& xt, int t) const;

  struct LossResult {
    LossBreakdown breakdown;
    nn::Tensor graph_total;  // scalar; backward() distributes into parameters
  };
  // state.retained_origin must index into x0. Throws UsageError if the number
  // of thinned points exceeds n_max.
  LossResult loss(const PointSet& x0, const LabeledState& state) const;

  const DenoiserConfig& config() const { return cfg_; }
  nn::ParameterStore& params() { return store_; }
  const nn::ParameterStore& params() const { return store_; }

 private:
  DenoiserConfig cfg_;
  nn::ParameterStore store_;
  nn::Linear token_proj_;
  nn::AttentionEncoder encoder_;
  nn::Mlp classifier_, count_head_, mixture_head_;
};

// Test double with access to the true clean set: survivors get keep_prob 1,
// noise keep_prob 0, and the thinned points are reproduced exactly.
class OracleDenoiser : public Denoiser {
 public:
  explicit OracleDenoiser(PointSet x0);
  DenoiserOutput predict(const PointSet& xt, int t) const override;
  X0Hat sample_x0_hat(const PointSet& xt, int t, Rng& rng) const override;
  // Checks that the labeled retained part is a subset of the true clean set.
  DenoiserOutput predict_checked(const LabeledState& state) const;

 private:
  std::vector<std::size_t> missing_indices(const PointSet& xt) const;
  bool is_data_point(std::span<const double> raw) const;

  PointSet x0_;
};

}  // namespace ppdiff
