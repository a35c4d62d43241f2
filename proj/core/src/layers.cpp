#include "ppdiff/layers.hpp"

#include <cmath>

#include "ppdiff/errors.hpp"

namespace ppdiff::nn {

Tensor ParameterStore::insert(const std::string& name, Tensor t) {
  if (name.empty()) throw UsageError("ParameterStore: empty parameter name");
  if (!params_.emplace(name, t).second) {
    throw UsageError("ParameterStore: duplicate parameter name " + name);
  }
  moments_[name] = Moments{std::vector<double>(t.size(), 0.0),
                           std::vector<double>(t.size(), 0.0)};
  return t;
}

Tensor ParameterStore::create(const std::string& name, int rows, int cols, Rng& rng) {
  const double a = std::sqrt(6.0 / (rows + cols));
  std::vector<double> v(static_cast<std::size_t>(rows) * cols);
  for (double& x : v) x = rng.uniform(-a, a);
  return insert(name, Tensor::leaf(rows, cols, std::move(v), name));
}

Tensor ParameterStore::create_zeros(const std::string& name, int rows, int cols) {
  return insert(name, Tensor::leaf(rows, cols,
                                   std::vector<double>(static_cast<std::size_t>(rows) * cols, 0.0),
                                   name));
}

Tensor ParameterStore::create_const(const std::string& name, int rows, int cols, double fill) {
  return insert(name, Tensor::leaf(rows, cols,
                                   std::vector<double>(static_cast<std::size_t>(rows) * cols, fill),
                                   name));
}

Tensor ParameterStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw UsageError("ParameterStore: unknown parameter " + name);
  return it->second;
}

std::size_t ParameterStore::total_size() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += t.size();
  return n;
}

std::map<std::string, std::vector<double>> ParameterStore::snapshot_values() const {
  std::map<std::string, std::vector<double>> snap;
  for (const auto& [name, t] : params_) snap[name] = t.values();
  return snap;
}

void ParameterStore::restore_values(const std::map<std::string, std::vector<double>>& snap) {
  for (auto& [name, t] : params_) {
    auto it = snap.find(name);
    if (it == snap.end() || it->second.size() != t.size()) {
      throw UsageError("ParameterStore::restore_values: snapshot mismatch at " + name);
    }
    t.mutable_values() = it->second;
  }
}

void adam_step(ParameterStore& store, const GradMap& grads, const AdamConfig& cfg) {
  // Global gradient norm over all parameters, in name order.
  double sq = 0.0;
  for (const auto& [name, g] : grads) {
    if (!store.has(name)) throw UsageError("adam_step: gradient for unknown parameter " + name);
    for (double v : g) {
      if (!std::isfinite(v)) throw NumericError("adam_step: non-finite gradient in " + name);
      sq += v * v;
    }
  }
  const double norm = std::sqrt(sq);
  const double scale = (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) ? cfg.clip_norm / norm : 1.0;

  const long t = store.step_ref() + 1;
  store.set_step_count(t);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));

  for (const auto& [name, graw] : grads) {
    Tensor p = store.get(name);
    auto& mom = store.moments()[name];
    auto& vals = p.mutable_values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double g = graw[i] * scale;
      mom.m[i] = cfg.beta1 * mom.m[i] + (1.0 - cfg.beta1) * g;
      mom.v[i] = cfg.beta2 * mom.v[i] + (1.0 - cfg.beta2) * g * g;
      const double mhat = mom.m[i] / bc1;
      const double vhat = mom.v[i] / bc2;
      vals[i] -= cfg.lr * (mhat / (std::sqrt(vhat) + cfg.eps) + cfg.weight_decay * vals[i]);
    }
  }
}

Tensor sinusoidal_embed(long k, int dim) {
  if (dim < 2 || dim % 2 != 0) throw UsageError("sinusoidal_embed: dim must be even and >= 2");
  if (k < 0) throw UsageError("sinusoidal_embed: k must be nonnegative");
  std::vector<double> v(dim);
  for (int i = 0; i < dim / 2; ++i) {
    const double w = std::pow(10000.0, -2.0 * i / dim);
    v[2 * i] = std::sin(k * w);
    v[2 * i + 1] = std::cos(k * w);
  }
  return Tensor::constant(1, dim, std::move(v));
}

Linear::Linear(ParameterStore& store, const std::string& prefix, int in, int out, Rng& rng,
               bool zero_init)
    : w_(zero_init ? store.create_zeros(prefix + ".w", in, out)
                   : store.create(prefix + ".w", in, out, rng)),
      b_(store.create_zeros(prefix + ".b", 1, out)) {}

Tensor Linear::forward(const Tensor& x) const { return add_rowvec(matmul(x, w_), b_); }

LayerNorm::LayerNorm(ParameterStore& store, const std::string& prefix, int dim)
    : gain_(store.create_const(prefix + ".gain", 1, dim, 1.0)),
      bias_(store.create_zeros(prefix + ".bias", 1, dim)) {}

Tensor LayerNorm::forward(const Tensor& x) const { return layer_norm_rows(x, gain_, bias_); }

MultiHeadAttention::MultiHeadAttention(ParameterStore& store, const std::string& prefix, int dim,
                                       int heads, Rng& rng)
    : wq_(store, prefix + ".q", dim, dim, rng),
      wk_(store, prefix + ".k", dim, dim, rng),
      wv_(store, prefix + ".v", dim, dim, rng),
      wo_(store, prefix + ".o", dim, dim, rng),
      dim_(dim),
      heads_(heads) {
  if (heads < 1 || dim % heads != 0) {
    throw UsageError("MultiHeadAttention: dim must be divisible by heads");
  }
}

Tensor MultiHeadAttention::forward(const Tensor& x) const {
  const int n = x.rows();
  if (x.cols() != dim_) throw UsageError("MultiHeadAttention: input width mismatch");
  if (n == 0) return Tensor::zeros(0, dim_);
  const Tensor q = wq_.forward(x), k = wk_.forward(x), v = wv_.forward(x);
  const int dk = dim_ / heads_;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dk));
  Tensor merged;
  for (int h = 0; h < heads_; ++h) {
    const Tensor qh = slice_cols(q, h * dk, (h + 1) * dk);
    const Tensor kh = slice_cols(k, h * dk, (h + 1) * dk);
    const Tensor vh = slice_cols(v, h * dk, (h + 1) * dk);
    const Tensor scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
    const Tensor probs = row_softmax(scores);
    const Tensor oh = matmul(probs, vh);
    merged = h == 0 ? oh : concat_cols(merged, oh);
  }
  return wo_.forward(merged);
}

EncoderBlock::EncoderBlock(ParameterStore& store, const std::string& prefix, int dim, int heads,
                           int ffn_hidden, Rng& rng)
    : ln1_(store, prefix + ".ln1", dim),
      ln2_(store, prefix + ".ln2", dim),
      attn_(store, prefix + ".attn", dim, heads, rng),
      ffn1_(store, prefix + ".ffn1", dim, ffn_hidden, rng),
      ffn2_(store, prefix + ".ffn2", ffn_hidden, dim, rng) {}

Tensor EncoderBlock::forward(const Tensor& x) const {
  const Tensor h = add(x, attn_.forward(ln1_.forward(x)));
  return add(h, ffn2_.forward(relu(ffn1_.forward(ln2_.forward(h)))));
}

AttentionEncoder::AttentionEncoder(ParameterStore& store, const std::string& prefix, int dim,
                                   int heads, int blocks, int ffn_hidden, Rng& rng) {
  if (blocks < 1) throw UsageError("AttentionEncoder: need at least one block");
  for (int b = 0; b < blocks; ++b) {
    blocks_.emplace_back(store, prefix + ".block" + std::to_string(b), dim, heads, ffn_hidden,
                         rng);
  }
}

Tensor AttentionEncoder::forward(const Tensor& tokens) const {
  if (tokens.rows() == 0) return tokens;
  Tensor h = tokens;
  for (const auto& b : blocks_) h = b.forward(h);
  return h;
}

Mlp::Mlp(ParameterStore& store, const std::string& prefix, const std::vector<int>& dims, Rng& rng,
         bool zero_init_last) {
  if (dims.size() < 2) throw UsageError("Mlp: need at least input and output dims");
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const bool last = i + 2 == dims.size();
    layers_.emplace_back(store, prefix + ".l" + std::to_string(i), dims[i], dims[i + 1], rng,
                         last && zero_init_last);
  }
}

Tensor Mlp::forward(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].forward(h);
    if (i + 1 < layers_.size()) h = relu(h);
  }
  return h;
}

}  // namespace ppdiff::nn
