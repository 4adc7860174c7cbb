#include "goalflow/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace goalflow::nn {

namespace {

Tensor uniform(Shape shape, Scalar bound, Rng& rng) {
  std::uniform_real_distribution<Scalar> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

}  // namespace

Linear::Linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out,
               Rng& rng) {
  const Scalar bound = std::sqrt(1.0 / static_cast<Scalar>(in));
  weight_ = store.create(name + ".weight", uniform({in, out}, bound, rng));
  bias_ = store.create(name + ".bias", uniform({out}, bound, rng));
}

LayerNorm::LayerNorm(ParamStore& store, const std::string& name, std::size_t dim) {
  gain_ = store.create(name + ".gain", Tensor({dim}, 1.0));
  bias_ = store.create(name + ".bias", Tensor({dim}, 0.0));
}

Mlp::Mlp(ParamStore& store, const std::string& name, std::size_t in, std::size_t hidden,
         std::size_t out, Rng& rng)
    : fc1_(store, name + ".fc1", in, hidden, rng), fc2_(store, name + ".fc2", hidden, out, rng) {}

MultiHeadAttention::MultiHeadAttention(ParamStore& store, const std::string& name,
                                       std::size_t dim, std::size_t heads, Rng& rng)
    : heads_(heads) {
  if (heads == 0 || dim % heads != 0) {
    throw std::invalid_argument("MultiHeadAttention: dim " + std::to_string(dim) +
                                " not divisible by " + std::to_string(heads) + " heads");
  }
  q_ = Linear(store, name + ".q", dim, dim, rng);
  k_ = Linear(store, name + ".k", dim, dim, rng);
  v_ = Linear(store, name + ".v", dim, dim, rng);
  o_ = Linear(store, name + ".o", dim, dim, rng);
}

Var MultiHeadAttention::operator()(const Var& query, const Var& key, const Var& value,
                                   std::size_t batch, Tensor* weights) const {
  return o_(attention(q_(query), k_(key), v_(value), batch, heads_, weights));
}

TransformerBlock::TransformerBlock(ParamStore& store, const std::string& name, std::size_t dim,
                                   std::size_t heads, Rng& rng)
    : norm_attn_(store, name + ".norm_attn", dim),
      norm_ffn_(store, name + ".norm_ffn", dim),
      attn_(store, name + ".attn", dim, heads, rng),
      ffn_(store, name + ".ffn", dim, 2 * dim, dim, rng) {}

Var TransformerBlock::operator()(const Var& x, std::size_t batch) const {
  const Var h = norm_attn_(x);
  const Var y = add(x, attn_(h, h, h, batch));
  return add(y, ffn_(norm_ffn_(y)));
}

Var TransformerBlock::operator()(const Var& x, const Var& context, std::size_t batch) const {
  const Var y = add(x, attn_(norm_attn_(x), context, context, batch));
  return add(y, ffn_(norm_ffn_(y)));
}

Tensor sinusoidal_encode(Scalar value, std::size_t dim, const SinusoidalOptions& opts) {
  if (dim == 0 || dim % 2 != 0) {
    throw std::invalid_argument("sinusoidal_encode: dim must be even and positive, got " +
                                std::to_string(dim));
  }
  const std::size_t half = dim / 2;
  Tensor out({dim});
  const Scalar v = value * opts.input_scale;
  for (std::size_t k = 0; k < half; ++k) {
    const Scalar freq = std::pow(opts.max_period, -static_cast<Scalar>(k) / static_cast<Scalar>(half));
    out[2 * k] = std::sin(v * freq);
    out[2 * k + 1] = std::cos(v * freq);
  }
  return out;
}

Tensor sinusoidal_encode(std::span<const Scalar> values, std::size_t dim,
                         const SinusoidalOptions& opts) {
  Tensor out({values.size() * dim});
  for (std::size_t i = 0; i < values.size(); ++i) {
    const Tensor part = sinusoidal_encode(values[i], dim, opts);
    std::copy(part.data().begin(), part.data().end(), out.data().begin() + i * dim);
  }
  return out;
}

Tensor sinusoidal_encode_rows(const Tensor& rows, std::size_t dim, const SinusoidalOptions& opts) {
  const std::size_t r = rows.rows(), k = rows.cols();
  Tensor out({r, k * dim});
  for (std::size_t i = 0; i < r; ++i) {
    const Tensor enc = sinusoidal_encode(rows.data().subspan(i * k, k), dim, opts);
    std::copy(enc.data().begin(), enc.data().end(), out.data().begin() + i * k * dim);
  }
  return out;
}

}  // namespace goalflow::nn
