#pragma once

#include <string>

#include "goalflow/nn/ops.hpp"
#include "goalflow/nn/param_store.hpp"
#include "goalflow/nn/random.hpp"

namespace goalflow::nn {

/// y = x W + b, W uniform in +-sqrt(1/fan_in).
class Linear {
 public:
  Linear() = default;
  Linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng);
  Var operator()(const Var& x) const { return linear(x, weight_, bias_); }
  const Var& weight() const { return weight_; }
  const Var& bias() const { return bias_; }
  std::size_t in_features() const { return weight_.value().dim(0); }
  std::size_t out_features() const { return weight_.value().dim(1); }

 private:
  Var weight_, bias_;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParamStore& store, const std::string& name, std::size_t dim);
  Var operator()(const Var& x) const { return layer_norm(x, gain_, bias_); }

 private:
  Var gain_, bias_;
};

/// Two-layer perceptron with SiLU.
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParamStore& store, const std::string& name, std::size_t in, std::size_t hidden,
      std::size_t out, Rng& rng);
  Var operator()(const Var& x) const { return fc2_(silu(fc1_(x))); }

 private:
  Linear fc1_, fc2_;
};

/// Multi-head attention with query/key/value/output projections.
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(ParamStore& store, const std::string& name, std::size_t dim,
                     std::size_t heads, Rng& rng);

  /// query: [batch*Tq, d]; key/value: [batch*Tk, d].
  Var operator()(const Var& query, const Var& key, const Var& value, std::size_t batch,
                 Tensor* weights = nullptr) const;

  std::size_t heads() const { return heads_; }
  const Linear& value_proj() const { return v_; }
  const Linear& out_proj() const { return o_; }
  const Linear& query_proj() const { return q_; }
  const Linear& key_proj() const { return k_; }

 private:
  Linear q_, k_, v_, o_;
  std::size_t heads_ = 1;
};

/// Pre-norm transformer layer. With `context` it attends to that token set
/// (decoder cross-attention), otherwise to its own tokens.
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(ParamStore& store, const std::string& name, std::size_t dim, std::size_t heads,
                   Rng& rng);

  Var operator()(const Var& x, std::size_t batch) const;
  Var operator()(const Var& x, const Var& context, std::size_t batch) const;

 private:
  LayerNorm norm_attn_, norm_ffn_;
  MultiHeadAttention attn_;
  Mlp ffn_;
};

struct SinusoidalOptions {
  Scalar max_period = 10000;
  Scalar input_scale = 1;
};

/// Interleaved [sin(v w0), cos(v w0), sin(v w1), cos(v w1), ...] with
/// w_k = max_period^(-k/(dim/2)). `dim` must be even.
Tensor sinusoidal_encode(Scalar value, std::size_t dim, const SinusoidalOptions& opts = {});
/// Per-component encodings of a vector, concatenated (length values.size()*dim).
Tensor sinusoidal_encode(std::span<const Scalar> values, std::size_t dim,
                         const SinusoidalOptions& opts = {});
/// Encodes every row of `rows` [r, k] into [r, k*dim].
Tensor sinusoidal_encode_rows(const Tensor& rows, std::size_t dim, const SinusoidalOptions& opts = {});

}  // namespace goalflow::nn
