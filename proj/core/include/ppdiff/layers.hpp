#pragma once

#include <map>
#include <string>
#include <vector>

#include "ppdiff/rng.hpp"
#include "ppdiff/tensor.hpp"

namespace ppdiff::nn {

// Owns named trainable tensors plus their Adam moment state. Iteration order
// is the name order (std::map), which fixes the floating-point reduction order
// of the optimizer and the serialization layout.
class ParameterStore {
 public:
  // Xavier-uniform initialized leaf.
  Tensor create(const std::string& name, int rows, int cols, Rng& rng);
  Tensor create_zeros(const std::string& name, int rows, int cols);
  Tensor create_const(const std::string& name, int rows, int cols, double fill);

  Tensor get(const std::string& name) const;
  bool has(const std::string& name) const { return params_.count(name) > 0; }
  const std::map<std::string, Tensor>& all() const { return params_; }
  std::size_t total_size() const;

  std::map<std::string, std::vector<double>> snapshot_values() const;
  void restore_values(const std::map<std::string, std::vector<double>>& snap);

  struct Moments {
    std::vector<double> m, v;
  };
  std::map<std::string, Moments>& moments() { return moments_; }
  long step_count() const { return step_; }
  void set_step_count(long s) { step_ = s; }
  long& step_ref() { return step_; }

 private:
  Tensor insert(const std::string& name, Tensor t);

  std::map<std::string, Tensor> params_;
  std::map<std::string, Moments> moments_;
  long step_ = 0;
};

// One AdamW update from accumulated gradients: gradients are first rescaled so
// their global l2 norm is at most clip_norm, then each parameter gets the
// bias-corrected Adam step plus decoupled weight decay lr * weight_decay * p.
// Throws NumericError on non-finite gradients.
struct AdamConfig {
  double lr = 1e-3;
  double weight_decay = 1e-4;
  double clip_norm = 2.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};
void adam_step(ParameterStore& store, const GradMap& grads, const AdamConfig& cfg);

// Fixed sinusoidal embedding of a nonnegative integer k:
// out[2i] = sin(k * w_i), out[2i+1] = cos(k * w_i), w_i = 10000^(-2i/dim).
Tensor sinusoidal_embed(long k, int dim);

// y = x W + b with W [in x out], b [1 x out].
class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore& store, const std::string& prefix, int in, int out, Rng& rng,
         bool zero_init = false);
  Tensor forward(const Tensor& x) const;

 private:
  Tensor w_, b_;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParameterStore& store, const std::string& prefix, int dim);
  Tensor forward(const Tensor& x) const;

 private:
  Tensor gain_, bias_;
};

// Full (unmasked) multi-head self-attention over a set of tokens. No
// positional encoding: outputs are permutation-equivariant in the rows.
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterStore& store, const std::string& prefix, int dim, int heads,
                     Rng& rng);
  Tensor forward(const Tensor& x) const;
  int heads() const { return heads_; }

 private:
  Linear wq_, wk_, wv_, wo_;
  int dim_ = 0, heads_ = 0;
};

// Pre-LN transformer encoder block: x + MHA(LN(x)), then x + FFN(LN(x)).
class EncoderBlock {
 public:
  EncoderBlock() = default;
  EncoderBlock(ParameterStore& store, const std::string& prefix, int dim, int heads,
               int ffn_hidden, Rng& rng);
  Tensor forward(const Tensor& x) const;

 private:
  LayerNorm ln1_, ln2_;
  MultiHeadAttention attn_;
  Linear ffn1_, ffn2_;
};

// Stack of encoder blocks over tokens [n x dim]; n = 0 passes through.
class AttentionEncoder {
 public:
  AttentionEncoder() = default;
  AttentionEncoder(ParameterStore& store, const std::string& prefix, int dim, int heads,
                   int blocks, int ffn_hidden, Rng& rng);
  Tensor forward(const Tensor& tokens) const;

 private:
  std::vector<EncoderBlock> blocks_;
};

// 2- or 3-layer ReLU MLP; the final layer can be zero-initialized.
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParameterStore& store, const std::string& prefix, const std::vector<int>& dims, Rng& rng,
      bool zero_init_last = true);
  Tensor forward(const Tensor& x) const;

 private:
  std::vector<Linear> layers_;
};

}  // namespace ppdiff::nn
