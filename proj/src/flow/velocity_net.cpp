#include "goalflow/flow/velocity_net.hpp"

#include <random>
#include <stdexcept>

#include "goalflow/flow/normalizer.hpp"

namespace goalflow::flow {

namespace {

const nn::SinusoidalOptions kGoalEncoding{1000.0, 1.0};
const nn::SinusoidalOptions kTimeEncoding{10000.0, 1000.0};

Var embedding(nn::ParamStore& store, const std::string& name, nn::Shape shape, Rng& rng) {
  std::normal_distribution<Scalar> normal(0.0, 0.02);
  Tensor t(std::move(shape));
  for (auto& v : t.storage()) v = normal(rng);
  return store.create(name, std::move(t));
}

}  // namespace

VelocityNet::VelocityNet(nn::ParamStore& store, const std::string& name, const VelocityNetConfig& config,
                         Rng& rng)
    : config_(config) {
  const std::size_t d = config.dim;
  env_proj_ = nn::Linear(store, name + ".env_proj", d, d, rng);
  goal_proj_ = nn::Linear(store, name + ".goal_proj", kChannels * config.goal_encoding_dim, d, rng);
  traj_proj_ = nn::Linear(store, name + ".traj_proj", kTrajValues, d, rng);
  time_proj_ = nn::Linear(store, name + ".time_proj", config.time_encoding_dim, d, rng);
  null_env_ = embedding(store, name + ".null_env", {d}, rng);
  null_goal_ = embedding(store, name + ".null_goal", {d}, rng);
  slot_embedding_ = embedding(store, name + ".slot_embedding", {kSlots, d}, rng);
  for (std::size_t l = 0; l < config.layers; ++l) {
    blocks_.emplace_back(store, name + ".block" + std::to_string(l), d, config.heads, rng);
  }
  out_norm_ = nn::LayerNorm(store, name + ".out_norm", d);
  out_proj_ = nn::Linear(store, name + ".out_proj", d, kTrajValues, rng);
  skip_gate_ = nn::Linear(store, name + ".skip_gate", config.time_encoding_dim, kTrajValues, rng);
  for (Var v : {skip_gate_.weight(), skip_gate_.bias()}) v.mutable_value().fill(0);
}

Tensor VelocityNet::goal_codes(const Tensor& goals) const {
  if (goals.cols() != kChannels) throw std::invalid_argument("goal_codes: goals must be [B, 3]");
  return nn::sinusoidal_encode_rows(goals, config_.goal_encoding_dim, kGoalEncoding);
}

VelocityNet::Conditioning VelocityNet::condition(const Var& env, const Tensor& goals,
                                                 const std::vector<bool>& keep_env,
                                                 const std::vector<bool>& keep_goal) const {
  const std::size_t B = env.rows();
  if (env.cols() != config_.dim || goals.rows() != B || keep_env.size() != B || keep_goal.size() != B) {
    throw std::invalid_argument("VelocityNet::condition: inconsistent batch or feature sizes");
  }
  Conditioning c;
  c.batch = B;
  c.env = nn::masked_replace(env_proj_(env), null_env_, keep_env);
  c.goal = nn::masked_replace(goal_proj_(Var(goal_codes(goals))), null_goal_, keep_goal);
  return c;
}

VelocityNet::Conditioning VelocityNet::repeat(const Conditioning& c, std::size_t copies) const {
  if (c.batch != 1) throw std::invalid_argument("VelocityNet::repeat expects a single-sample conditioning");
  return {nn::repeat_rows(c.env, copies), nn::repeat_rows(c.goal, copies), copies};
}

Var VelocityNet::velocity(const Conditioning& cond, const Var& x_t, std::span<const Scalar> t) const {
  const std::size_t B = cond.batch;
  if (x_t.rows() != B || x_t.cols() != kTrajValues || t.size() != B) {
    throw std::invalid_argument("VelocityNet::velocity: x_t must be [B, 24] with one t per row");
  }
  Tensor t_codes({B, config_.time_encoding_dim});
  for (std::size_t b = 0; b < B; ++b) {
    const Tensor code = nn::sinusoidal_encode(t[b], config_.time_encoding_dim, kTimeEncoding);
    std::copy(code.storage().begin(), code.storage().end(), t_codes.storage().begin() + b * config_.time_encoding_dim);
  }
  const Var traj = traj_proj_(x_t);
  const Var t_var(t_codes);
  const Var time = time_proj_(t_var);
  Var x = nn::interleave_blocks({cond.env, cond.goal, traj, time}, {1, 1, 1, 1}, B);
  x = nn::add(x, nn::tile_rows(slot_embedding_, B));
  for (const auto& block : blocks_) x = block(x, B);
  const Var head = out_proj_(out_norm_(nn::slice_blocks(x, kSlots, kTraj, 1)));
  return nn::add(head, nn::mul(skip_gate_(t_var), x_t));
}

}  // namespace goalflow::flow
