#include "goalflow/app/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "goalflow/flow/rectified_flow.hpp"
#include "goalflow/goal/targets.hpp"
#include "goalflow/nn/ops.hpp"

namespace goalflow::app {

namespace {

using nn::Tensor;
using nn::Var;

constexpr std::uint64_t kGoalStage = 1;
constexpr std::uint64_t kPlannerStage = 2;
constexpr double kFinalLrFraction = 0.05;

/// Cosine decay from lr to kFinalLrFraction * lr over a stage.
double epoch_lr(double lr, std::size_t epoch, std::size_t epochs) {
  if (epochs <= 1) return lr;
  const double progress = static_cast<double>(epoch) / static_cast<double>(epochs - 1);
  const double cosine = 0.5 * (1 + std::cos(std::numbers::pi * progress));
  return lr * (kFinalLrFraction + (1 - kFinalLrFraction) * cosine);
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += batch_size) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + batch_size)));
  }
  return out;
}

Tensor stack_rows(const std::vector<const Tensor*>& parts) {
  const std::size_t cols = parts.front()->cols();
  std::size_t rows = 0;
  for (const auto* p : parts) rows += p->rows();
  Tensor out({rows, cols});
  auto it = out.storage().begin();
  for (const auto* p : parts) it = std::copy(p->storage().begin(), p->storage().end(), it);
  return out;
}

struct GoalTargets {
  std::vector<Tensor> dis, dac;
};

GoalTargets goal_targets(const GoalFlowModel& model, const std::vector<scenario::Sample>& data) {
  GoalTargets out;
  const auto& points = model.vocabulary().points;
  for (const auto& s : data) {
    out.dis.push_back(goal::target_distance_scores(points, s.goal_gt).reshaped({1, points.size()}));
    out.dac.push_back(goal::target_dac_scores(points, s.scene.drivable_area, {}).reshaped({1, points.size()}));
  }
  return out;
}

EpochLog goal_epoch(GoalFlowModel& model, nn::Adam& adam, const std::vector<scenario::Sample>& data,
                    const GoalTargets& targets, std::size_t epoch) {
  const RunConfig& c = model.config();
  Rng rng(derive_seed(c.train_seed, kGoalStage, epoch));
  adam.set_lr(epoch_lr(c.lr, epoch, c.goal_epochs));
  nn::ParamStore& store = model.params();
  const nn::ParamStore trainable = store.subset(std::vector<std::string>{"encoder.", "scorer."});
  EpochLog log{"goal", epoch + 1};
  std::size_t batches = 0;
  for (const auto& batch : epoch_batches(data.size(), c.batch_size, rng)) {
    std::vector<const scenario::Scene*> scenes;
    std::vector<const scenario::EgoStatus*> egos;
    std::vector<const Tensor*> dis_t, dac_t;
    for (std::size_t i : batch) {
      scenes.push_back(&data[i].scene);
      egos.push_back(&data[i].scene.ego);
      dis_t.push_back(&targets.dis[i]);
      dac_t.push_back(&targets.dac[i]);
    }
    const Var tokens = model.encoder().encode_scenes(scenes);
    const Var ego = model.encoder().encode_egos(egos);
    const auto out = model.scorer().forward(tokens, ego, batch.size());
    const auto loss =
        goal::goal_losses(out.dis, out.dac, stack_rows(dis_t), stack_rows(dac_t), c.w4, c.w5, c.eps_clamp);
    store.zero_grad();
    nn::backward(loss.total);
    adam.step(trainable);
    log.loss += loss.total.value().item();
    log.dis += loss.dis;
    log.dac += loss.dac;
    ++batches;
  }
  store.zero_grad();
  log.loss /= static_cast<double>(batches);
  log.dis /= static_cast<double>(batches);
  log.dac /= static_cast<double>(batches);
  return log;
}

/// Token and ego features are fixed during the planner stage, so they are
/// computed once.
struct FrozenFeatures {
  std::vector<Tensor> tokens;  // [n_tok, d] each
  std::vector<Tensor> ego;     // [1, d] each
  std::vector<Tensor> target;  // normalized ground truth, [1, 24] each
};

FrozenFeatures frozen_features(const GoalFlowModel& model, const std::vector<scenario::Sample>& data) {
  nn::NoGradGuard guard;
  FrozenFeatures out;
  for (const auto& s : data) {
    out.tokens.push_back(model.encoder().encode_scene(s.scene).value());
    out.ego.push_back(model.encoder().encode_ego(s.scene.ego).value());
    out.target.push_back(model.statistics().normalizer.normalize(s.tau_gt).reshaped({1, flow::kTrajValues}));
  }
  return out;
}

EpochLog planner_epoch(GoalFlowModel& model, nn::Adam& adam, const std::vector<scenario::Sample>& data,
                       const FrozenFeatures& features, std::size_t epoch) {
  const RunConfig& c = model.config();
  Rng rng(derive_seed(c.train_seed, kPlannerStage, epoch));
  adam.set_lr(epoch_lr(c.lr, epoch, c.planner_epochs));
  nn::ParamStore& store = model.params();
  const nn::ParamStore trainable = store.subset(std::vector<std::string>{"planner.", "encoder.env."});
  EpochLog log{"planner", epoch + 1};
  std::size_t batches = 0;
  for (const auto& batch : epoch_batches(data.size(), c.batch_size, rng)) {
    std::vector<const Tensor*> tokens, egos;
    std::vector<bool> keep_env, keep_goal;
    Tensor goals({batch.size(), 3});
    std::vector<flow::TrainingPair> pairs;
    std::vector<nn::Scalar> t;
    for (std::size_t r = 0; r < batch.size(); ++r) {
      const std::size_t i = batch[r];
      tokens.push_back(&features.tokens[i]);
      egos.push_back(&features.ego[i]);
      const auto mask = flow::condition_mask(rng, c.p_mask);
      keep_env.push_back(mask.keep_env);
      keep_goal.push_back(mask.keep_goal);
      goals.at(r, 0) = data[i].goal_gt.x;
      goals.at(r, 1) = data[i].goal_gt.y;
      goals.at(r, 2) = data[i].goal_gt.heading;
      pairs.push_back(flow::sample_training_pair(features.target[i], c.sigma, rng));
      t.push_back(pairs.back().t);
    }
    std::vector<const Tensor*> x_t, v_t;
    for (const auto& p : pairs) {
      x_t.push_back(&p.x_t);
      v_t.push_back(&p.v_t);
    }
    const Var env = model.encoder().env_condition(Var(stack_rows(tokens)), Var(stack_rows(egos)), batch.size());
    const auto cond = model.planner().condition(env, goals, keep_env, keep_goal);
    const Var pred = model.planner().velocity(cond, Var(stack_rows(x_t)), t);
    const Var loss = flow::flow_loss(pred, Var(stack_rows(v_t)));
    store.zero_grad();
    nn::backward(loss);
    adam.step(trainable);
    log.loss += loss.value().item();
    ++batches;
  }
  store.zero_grad();
  log.loss /= static_cast<double>(batches);
  return log;
}

}  // namespace

void train(GoalFlowModel& model, TrainingState& state, const std::vector<scenario::Sample>& data,
           const TrainOptions& options) {
  if (data.empty()) throw std::invalid_argument("training set is empty");
  const RunConfig& c = model.config();
  std::size_t budget = options.max_epochs;
  auto record = [&](const EpochLog& log) {
    state.log.push_back(log);
    if (options.on_epoch) options.on_epoch(log);
    --budget;
  };
  if (state.goal_epochs_done < c.goal_epochs && budget > 0) {
    const GoalTargets targets = goal_targets(model, data);
    while (state.goal_epochs_done < c.goal_epochs && budget > 0) {
      record(goal_epoch(model, state.goal_optimizer, data, targets, state.goal_epochs_done));
      ++state.goal_epochs_done;
    }
  }
  if (state.goal_epochs_done < c.goal_epochs) return;
  if (state.planner_epochs_done < c.planner_epochs && budget > 0) {
    const FrozenFeatures features = frozen_features(model, data);
    while (state.planner_epochs_done < c.planner_epochs && budget > 0) {
      record(planner_epoch(model, state.planner_optimizer, data, features, state.planner_epochs_done));
      ++state.planner_epochs_done;
    }
  }
}

LoadedModel warm_start_from_goal_stage(const GoalFlowModel& source, const TrainingState& source_state,
                                       const RunConfig& config) {
  const RunConfig& s = source.config();
  const std::pair<const char*, bool> fixed[] = {
      {"dim", s.dim != config.dim},
      {"layers", s.layers != config.layers},
      {"heads", s.heads != config.heads},
      {"scorer_layers", s.scorer_layers != config.scorer_layers},
      {"vocab_size", s.vocab_size != config.vocab_size},
      {"train_seed", s.train_seed != config.train_seed},
      {"goal_epochs", s.goal_epochs != config.goal_epochs},
  };
  for (const auto& [key, changed] : fixed) {
    if (changed) throw ConfigError(key, "must match the warm-start model");
  }
  if (source_state.goal_epochs_done < s.goal_epochs) {
    throw std::invalid_argument("warm-start model has not finished its goal stage");
  }
  LoadedModel out;
  out.model = std::make_unique<GoalFlowModel>(config, source.vocabulary(), source.statistics());
  std::map<std::string, Tensor> carried;
  for (const auto& [name, value] : source.params().values()) {
    if (name.rfind("planner.", 0) == 0 || name.rfind("encoder.env.", 0) == 0) continue;
    carried.emplace(name, value);
  }
  auto fresh = out.model->params().values();
  for (auto& [name, value] : carried) fresh[name] = value;
  out.model->params().load_values(fresh);
  out.training = initial_training_state(config);
  out.training.goal_epochs_done = source_state.goal_epochs_done;
  out.training.goal_optimizer = source_state.goal_optimizer;
  for (const auto& e : source_state.log) {
    if (e.stage == "goal") out.training.log.push_back(e);
  }
  return out;
}

}  // namespace goalflow::app
