#pragma once

#include <functional>
#include <vector>

#include "goalflow/nn/autograd.hpp"
#include "goalflow/nn/random.hpp"

namespace goalflow::flow {

using nn::Scalar;
using nn::Tensor;
using nn::Var;

/// One straight-path training example: x_t = (1 - t) x0 + t target and the
/// velocity v_t = target - x0.
struct TrainingPair {
  Tensor x0;
  Tensor x_t;
  Tensor v_t;
  Scalar t = 0;
};

/// Draws t ~ U[0, 1] and x0 ~ N(0, sigma^2 I) shaped like `target`.
/// Throws std::invalid_argument unless sigma > 0.
TrainingPair sample_training_pair(const Tensor& target, Scalar sigma, Rng& rng);
/// Same construction with explicit t and x0.
TrainingPair make_training_pair(const Tensor& target, const Tensor& x0, Scalar t);

/// Which conditions to keep for one sample. Trajectory and time tokens are
/// never masked.
struct ConditionMask {
  bool keep_env = true;
  bool keep_goal = true;
};

/// Each maskable condition is dropped independently with probability
/// p_mask. Throws std::invalid_argument unless 0 <= p_mask < 1.
ConditionMask condition_mask(Rng& rng, Scalar p_mask);

struct TimestepSchedule {
  std::vector<Scalar> t;   // n_steps + 1 points, 0 .. 1
  std::vector<Scalar> dt;  // n_steps step weights

  std::size_t steps() const { return dt.size(); }
};

/// Uniform grid warped by u -> shift u / (1 + (shift - 1) u). Throws
/// std::invalid_argument for n_steps == 0 or shift <= 0.
TimestepSchedule timestep_schedule(std::size_t n_steps, Scalar shift = 1.0);

/// Mean absolute error over all components.
Var flow_loss(const Var& predicted, const Var& target);

/// Velocity field over a batch of flattened states [M, k] at time t.
using VelocityField = std::function<Tensor(const Tensor& x, Scalar t)>;

/// Euler integration x <- x + dt_i v(x, t_i) across the schedule.
Tensor integrate(const Tensor& x0, const TimestepSchedule& schedule, const VelocityField& field);

}  // namespace goalflow::flow
