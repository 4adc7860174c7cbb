#include "goalflow/app/model.hpp"

#include "goalflow/nn/checkpoint.hpp"
#include "goalflow/scenario/dataset_io.hpp"

namespace goalflow::app {

namespace {

constexpr const char* kParamPrefix = "param.";
constexpr const char* kGoalOptPrefix = "adam.goal.";
constexpr const char* kPlannerOptPrefix = "adam.planner.";

nn::AdamConfig adam_config(const RunConfig& c) { return {c.lr, c.beta1, c.beta2, 1e-8}; }

nlohmann::json log_to_json(const std::vector<EpochLog>& log) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : log) {
    out.push_back({{"stage", e.stage}, {"epoch", e.epoch}, {"loss", e.loss}, {"dis", e.dis}, {"dac", e.dac}});
  }
  return out;
}

std::vector<EpochLog> log_from_json(const nlohmann::json& j) {
  std::vector<EpochLog> out;
  for (const auto& e : j) {
    out.push_back({e.at("stage").get<std::string>(), e.at("epoch").get<std::size_t>(), e.at("loss").get<double>(),
                   e.value("dis", 0.0), e.value("dac", 0.0)});
  }
  return out;
}

std::map<std::string, nn::Tensor> strip_prefix(const std::map<std::string, nn::Tensor>& all, const std::string& prefix) {
  std::map<std::string, nn::Tensor> out;
  for (const auto& [name, t] : all) {
    if (name.compare(0, prefix.size(), prefix) == 0) out.emplace(name.substr(prefix.size()), t);
  }
  return out;
}

}  // namespace

ModelStatistics fit_statistics(const std::vector<scenario::Sample>& samples) {
  std::vector<scenario::Trajectory> trajs;
  std::vector<scenario::EgoStatus> egos;
  for (const auto& s : samples) {
    trajs.push_back(s.tau_gt);
    egos.push_back(s.scene.ego);
  }
  return {flow::TrajectoryNormalizer::fit(trajs), encoder::EgoStats::fit(egos)};
}

GoalFlowModel::GoalFlowModel(const RunConfig& config, goal::GoalVocabulary vocab, ModelStatistics stats)
    : config_(config), vocab_(std::move(vocab)), stats_(std::move(stats)) {
  validate(config_);
  if (vocab_.size() != config_.vocab_size) {
    throw ConfigError("vocab_size", "vocabulary has " + std::to_string(vocab_.size()) + " points, config expects " +
                                        std::to_string(config_.vocab_size));
  }
  Rng enc_rng(derive_seed(config_.train_seed, 1));
  Rng goal_rng(derive_seed(config_.train_seed, 2));
  Rng plan_rng(derive_seed(config_.train_seed, 3));
  encoder_ = encoder::SceneEncoder(store_, "encoder", {config_.dim, config_.heads, 16, 16, 8}, enc_rng);
  encoder_.set_ego_stats(stats_.ego);
  scorer_ = goal::GoalScorer(store_, "scorer", {config_.dim, config_.heads, config_.scorer_layers, 32},
                             vocab_.points, goal_rng);
  planner_ = flow::VelocityNet(store_, "planner", {config_.dim, config_.heads, config_.layers, 32, 64}, plan_rng);
}

TrainingState initial_training_state(const RunConfig& config) {
  TrainingState s{0, 0, nn::Adam(adam_config(config)), nn::Adam(adam_config(config)), {}};
  return s;
}

void save_model(const std::filesystem::path& path, const GoalFlowModel& model, const TrainingState& training) {
  nn::Checkpoint ck;
  ck.metadata = {{"format", "goalflow-model"},
                 {"config", config_to_json(model.config())},
                 {"vocabulary", goal::vocabulary_to_json(model.vocabulary())},
                 {"vocabulary_hash", model.vocabulary().hash()},
                 {"normalizer", model.statistics().normalizer.to_json()},
                 {"ego_stats", model.statistics().ego.to_json()},
                 {"training",
                  {{"goal_epochs_done", training.goal_epochs_done},
                   {"planner_epochs_done", training.planner_epochs_done},
                   {"goal_steps", training.goal_optimizer.steps()},
                   {"planner_steps", training.planner_optimizer.steps()},
                   {"log", log_to_json(training.log)}}}};
  for (const auto& [name, value] : model.params().values()) ck.tensors.emplace(kParamPrefix + name, value);
  for (auto& kv : training.goal_optimizer.export_state(kGoalOptPrefix)) ck.tensors.insert(kv);
  for (auto& kv : training.planner_optimizer.export_state(kPlannerOptPrefix)) ck.tensors.insert(kv);
  nn::save_checkpoint(path, ck);
}

LoadedModel load_model(const std::filesystem::path& path) {
  const nn::Checkpoint ck = nn::load_checkpoint(path);
  try {
    const auto& meta = ck.metadata;
    if (meta.value("format", "") != "goalflow-model") throw nn::CheckpointError("not a goalflow model checkpoint");
    const RunConfig config = config_from_json(meta.at("config"));
    goal::GoalVocabulary vocab = goal::vocabulary_from_json(meta.at("vocabulary"));
    if (vocab.hash() != meta.at("vocabulary_hash").get<std::string>()) {
      throw nn::CheckpointError("vocabulary hash mismatch inside checkpoint");
    }
    ModelStatistics stats{flow::TrajectoryNormalizer::from_json(meta.at("normalizer")),
                          encoder::EgoStats::from_json(meta.at("ego_stats"))};
    LoadedModel out;
    out.model = std::make_unique<GoalFlowModel>(config, std::move(vocab), std::move(stats));
    out.model->params().load_values(strip_prefix(ck.tensors, kParamPrefix));
    const auto& tr = meta.at("training");
    out.training = initial_training_state(config);
    out.training.goal_epochs_done = tr.at("goal_epochs_done").get<std::size_t>();
    out.training.planner_epochs_done = tr.at("planner_epochs_done").get<std::size_t>();
    out.training.goal_optimizer.import_state(ck.tensors, kGoalOptPrefix, tr.at("goal_steps").get<std::int64_t>());
    out.training.planner_optimizer.import_state(ck.tensors, kPlannerOptPrefix,
                                                tr.at("planner_steps").get<std::int64_t>());
    out.training.log = log_from_json(tr.at("log"));
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw nn::CheckpointError(std::string("checkpoint metadata: ") + e.what());
  } catch (const scenario::DatasetError& e) {
    throw nn::CheckpointError(std::string("checkpoint vocabulary: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw nn::CheckpointError(std::string("checkpoint contents: ") + e.what());
  } catch (const std::runtime_error& e) {
    if (dynamic_cast<const nn::CheckpointError*>(&e) || dynamic_cast<const ConfigError*>(&e)) throw;
    throw nn::CheckpointError(std::string("checkpoint parameters: ") + e.what());
  }
}

RunConfig with_runtime_overrides(const RunConfig& trained, const RunConfig& requested) {
  const std::pair<const char*, bool> fixed[] = {
      {"dim", trained.dim != requested.dim},
      {"layers", trained.layers != requested.layers},
      {"heads", trained.heads != requested.heads},
      {"scorer_layers", trained.scorer_layers != requested.scorer_layers},
      {"vocab_size", trained.vocab_size != requested.vocab_size},
  };
  for (const auto& [key, changed] : fixed) {
    if (changed) throw ConfigError(key, "cannot differ from the trained model");
  }
  return requested;
}

}  // namespace goalflow::app
