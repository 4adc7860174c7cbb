#include "goalflow/flow/rectified_flow.hpp"

#include <stdexcept>

#include "goalflow/nn/ops.hpp"

namespace goalflow::flow {

TrainingPair make_training_pair(const Tensor& target, const Tensor& x0, Scalar t) {
  if (target.shape() != x0.shape()) throw std::invalid_argument("training pair: noise and target shapes differ");
  TrainingPair p{x0, Tensor(target.shape()), Tensor(target.shape()), t};
  for (std::size_t i = 0; i < target.size(); ++i) {
    p.x_t[i] = (1 - t) * x0[i] + t * target[i];
    p.v_t[i] = target[i] - x0[i];
  }
  return p;
}

TrainingPair sample_training_pair(const Tensor& target, Scalar sigma, Rng& rng) {
  if (!(sigma > 0)) throw std::invalid_argument("sample_training_pair: sigma must be positive");
  const Scalar t = std::uniform_real_distribution<Scalar>(0.0, 1.0)(rng);
  std::normal_distribution<Scalar> noise(0.0, sigma);
  Tensor x0(target.shape());
  for (auto& v : x0.storage()) v = noise(rng);
  return make_training_pair(target, x0, t);
}

ConditionMask condition_mask(Rng& rng, Scalar p_mask) {
  if (!(p_mask >= 0 && p_mask < 1)) throw std::invalid_argument("condition_mask: p_mask must be in [0, 1)");
  if (p_mask == 0) return {};
  std::bernoulli_distribution drop(p_mask);
  ConditionMask m;
  m.keep_env = !drop(rng);
  m.keep_goal = !drop(rng);
  return m;
}

TimestepSchedule timestep_schedule(std::size_t n_steps, Scalar shift) {
  if (n_steps == 0) throw std::invalid_argument("timestep_schedule: n_steps must be at least 1");
  if (!(shift > 0)) throw std::invalid_argument("timestep_schedule: shift must be positive");
  TimestepSchedule s;
  s.t.resize(n_steps + 1);
  for (std::size_t i = 0; i <= n_steps; ++i) {
    const Scalar u = static_cast<Scalar>(i) / static_cast<Scalar>(n_steps);
    s.t[i] = shift * u / (1 + (shift - 1) * u);
  }
  s.t.front() = 0;
  s.t.back() = 1;
  for (std::size_t i = 0; i < n_steps; ++i) s.dt.push_back(s.t[i + 1] - s.t[i]);
  return s;
}

Var flow_loss(const Var& predicted, const Var& target) {
  if (predicted.shape() != target.shape()) throw std::invalid_argument("flow_loss: shape mismatch");
  return nn::mean(nn::abs(nn::sub(predicted, target)));
}

Tensor integrate(const Tensor& x0, const TimestepSchedule& schedule, const VelocityField& field) {
  Tensor x = x0;
  for (std::size_t i = 0; i < schedule.steps(); ++i) {
    const Tensor v = field(x, schedule.t[i]);
    if (v.size() != x.size()) throw std::invalid_argument("integrate: velocity size does not match state");
    for (std::size_t k = 0; k < x.size(); ++k) x[k] += schedule.dt[i] * v[k];
  }
  return x;
}

}  // namespace goalflow::flow
