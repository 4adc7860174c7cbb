#pragma once

#include <span>
#include <vector>

#include "goalflow/nn/layers.hpp"
#include "goalflow/scenario/types.hpp"

namespace goalflow::goal {

using nn::Scalar;
using nn::Tensor;
using nn::Var;

struct GoalScorerConfig {
  std::size_t dim = 128;
  std::size_t heads = 4;
  std::size_t layers = 2;
  /// Sinusoidal code length per goal component (x, y, heading).
  std::size_t encoding_dim = 32;
};

/// Predicted scores for one scene, each [N].
struct GoalScoreSet {
  Tensor dis;
  Tensor dac;
  Tensor final;
};

/// Decoder that scores every vocabulary point against a scene. The query of
/// point i is its learned embedding plus the ego feature; keys and values are
/// the scene tokens. Two heads give a distribution over points (dis) and an
/// independent drivability probability per point (dac).
class GoalScorer {
 public:
  GoalScorer() = default;
  GoalScorer(nn::ParamStore& store, const std::string& name, const GoalScorerConfig& config,
             const std::vector<scenario::GoalPoint>& vocab, Rng& rng);

  struct Output {
    Var dis;  // [B, N], rows on the simplex
    Var dac;  // [B, N], entries in (0, 1)
  };
  /// tokens [B*T, d], ego [B, d].
  Output forward(const Var& tokens, const Var& ego, std::size_t batch) const;

  /// F_v, [N, d].
  Var vocabulary_embedding() const;
  std::size_t vocab_size() const { return vocab_codes_.rows(); }
  const GoalScorerConfig& config() const { return config_; }

 private:
  GoalScorerConfig config_;
  Tensor vocab_codes_;  // [N, 3*encoding_dim]
  nn::Linear vocab_proj_;
  std::vector<nn::TransformerBlock> blocks_;
  nn::LayerNorm norm_;
  nn::Mlp dis_head_, dac_head_;
};

struct FinalScores {
  std::vector<double> scores;
  std::size_t best = 0;
};

/// w1 log max(dis, eps) + w2 log max(dac, eps); best is the argmax with ties
/// to the lowest index. Throws std::invalid_argument for negative weights or
/// mismatched sizes.
FinalScores final_scores(std::span<const Scalar> dis, std::span<const Scalar> dac, double w1, double w2,
                         double eps_clamp);

struct GoalLoss {
  Var total;
  double dis = 0;
  double dac = 0;
};

/// w4 * cross-entropy(dis) + w5 * binary cross-entropy(dac). The
/// cross-entropy is summed over points, the binary term averaged over
/// points; both are averaged over the batch. Logs are clamped at eps.
GoalLoss goal_losses(const Var& dis_pred, const Var& dac_pred, const Tensor& dis_target,
                     const Tensor& dac_target, double w4, double w5, double eps_clamp);

}  // namespace goalflow::goal
