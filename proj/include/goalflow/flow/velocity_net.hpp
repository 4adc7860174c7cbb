#pragma once

#include <span>
#include <vector>

#include "goalflow/nn/layers.hpp"

namespace goalflow::flow {

using nn::Scalar;
using nn::Tensor;
using nn::Var;

struct VelocityNetConfig {
  std::size_t dim = 128;
  std::size_t heads = 4;
  std::size_t layers = 4;
  std::size_t goal_encoding_dim = 32;  // per goal component
  std::size_t time_encoding_dim = 64;
};

/// Velocity predictor over four condition tokens (env, goal, noisy
/// trajectory, time). The trajectory token is read out after a stack of
/// self-attention blocks and projected to the 24 velocity components.
class VelocityNet {
 public:
  /// Token order inside each sample.
  enum Slot : std::size_t { kEnv = 0, kGoal = 1, kTraj = 2, kTime = 3, kSlots = 4 };

  VelocityNet() = default;
  VelocityNet(nn::ParamStore& store, const std::string& name, const VelocityNetConfig& config, Rng& rng);

  /// Env and goal tokens for a batch, with masked rows replaced by the
  /// learned null embeddings. Computed once per batch and reused across
  /// integration steps.
  struct Conditioning {
    Var env;   // [B, d]
    Var goal;  // [B, d]
    std::size_t batch = 0;
  };

  /// env [B, d]; goals [B, 3] as (x, y, heading) in meters/radians.
  Conditioning condition(const Var& env, const Tensor& goals, const std::vector<bool>& keep_env,
                         const std::vector<bool>& keep_goal) const;
  /// Expands a single-sample conditioning to `copies` identical rows.
  Conditioning repeat(const Conditioning& c, std::size_t copies) const;

  /// x_t [B, 24], one t per row. Returns [B, 24].
  Var velocity(const Conditioning& cond, const Var& x_t, std::span<const Scalar> t) const;

  /// Sinusoidal codes fed to the goal projection, [B, 3*goal_encoding_dim].
  Tensor goal_codes(const Tensor& goals) const;

  const VelocityNetConfig& config() const { return config_; }
  const Var& null_env() const { return null_env_; }
  const Var& null_goal() const { return null_goal_; }

 private:
  VelocityNetConfig config_;
  nn::Linear env_proj_, goal_proj_, traj_proj_, time_proj_;
  Var null_env_, null_goal_, slot_embedding_;
  std::vector<nn::TransformerBlock> blocks_;
  nn::LayerNorm out_norm_;
  nn::Linear out_proj_;
  nn::Linear skip_gate_;  // time-dependent elementwise gain on x_t added to the output
};

}  // namespace goalflow::flow
