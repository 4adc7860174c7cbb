#pragma once

#include <vector>

#include "goalflow/nn/autograd.hpp"

namespace goalflow::nn {

// Differentiable operations. Matrix-valued operations treat a tensor as
// rows() x cols(). Token sets for a batch are stored sample-major: a batch of
// B sets with T tokens each is a [B*T, d] matrix whose rows b*T..b*T+T-1
// belong to sample b.

Var matmul(const Var& a, const Var& b);
/// x[r, in] * weight[in, out] + bias[out]
Var linear(const Var& x, const Var& weight, const Var& bias);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
/// x[r, c] + row[c] broadcast over rows.
Var add_row(const Var& x, const Var& row);
/// scale * x + shift
Var affine(const Var& x, Scalar scale, Scalar shift = 0);

Var silu(const Var& x);
Var sigmoid(const Var& x);
Var abs(const Var& x);
/// log(max(x, floor)); no gradient where the floor is active.
Var log_clamped(const Var& x, Scalar floor);

Var sum(const Var& x);
Var mean(const Var& x);

Var softmax_rows(const Var& x);
Var layer_norm(const Var& x, const Var& gain, const Var& bias, Scalar eps = 1e-5);

/// Scaled dot-product attention, per head, no masking.
/// q: [B*Tq, D], k and v: [B*Tk, D], D divisible by `heads`.
/// Optionally reports the attention weights as [B, heads, Tq, Tk].
Var attention(const Var& q, const Var& k, const Var& v, std::size_t batch, std::size_t heads,
              Tensor* weights = nullptr);

/// x[B, d] -> [B*times, d], each row repeated `times` times consecutively.
Var repeat_rows(const Var& x, std::size_t times);
/// x[T, d] -> [times*T, d], the whole block repeated.
Var tile_rows(const Var& x, std::size_t times);
/// Merges per-sample token blocks: block i is [batch*counts[i], d]. Output is
/// [batch*sum(counts), d] with sample b's tokens from block 0, then block 1, ...
Var interleave_blocks(const std::vector<Var>& blocks, const std::vector<std::size_t>& counts,
                      std::size_t batch);
/// Inverse view of interleave_blocks: from x[batch*group, d] take tokens
/// [begin, begin+count) of every sample.
Var slice_blocks(const Var& x, std::size_t group, std::size_t begin, std::size_t count);
Var reshape(const Var& x, Shape shape);
/// Row r of x[B, d] is kept when keep[r], otherwise replaced by fill[d].
/// Replaced rows pass no gradient back to x.
Var masked_replace(const Var& x, const Var& fill, const std::vector<bool>& keep);

}  // namespace goalflow::nn
