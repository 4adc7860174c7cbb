#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "goalflow/app/config.hpp"
#include "goalflow/encoder/scene_encoder.hpp"
#include "goalflow/flow/normalizer.hpp"
#include "goalflow/flow/velocity_net.hpp"
#include "goalflow/goal/scorer.hpp"
#include "goalflow/goal/vocabulary.hpp"
#include "goalflow/nn/optim.hpp"

namespace goalflow::app {

/// Data-derived statistics the model is built around.
struct ModelStatistics {
  flow::TrajectoryNormalizer normalizer;
  encoder::EgoStats ego;
};

/// Fits trajectory and ego statistics on training samples.
ModelStatistics fit_statistics(const std::vector<scenario::Sample>& samples);

/// Scene encoder, goal scorer and flow planner sharing one parameter store.
/// Parameter names start with "encoder.", "scorer." and "planner.".
class GoalFlowModel {
 public:
  GoalFlowModel(const RunConfig& config, goal::GoalVocabulary vocab, ModelStatistics stats);
  GoalFlowModel(const GoalFlowModel&) = delete;
  GoalFlowModel& operator=(const GoalFlowModel&) = delete;

  const RunConfig& config() const { return config_; }
  const goal::GoalVocabulary& vocabulary() const { return vocab_; }
  const ModelStatistics& statistics() const { return stats_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }
  const encoder::SceneEncoder& encoder() const { return encoder_; }
  const goal::GoalScorer& scorer() const { return scorer_; }
  const flow::VelocityNet& planner() const { return planner_; }

 private:
  RunConfig config_;
  goal::GoalVocabulary vocab_;
  ModelStatistics stats_;
  nn::ParamStore store_;
  encoder::SceneEncoder encoder_;
  goal::GoalScorer scorer_;
  flow::VelocityNet planner_;
};

struct EpochLog {
  std::string stage;  // "goal" or "planner"
  std::size_t epoch = 0;
  double loss = 0;
  double dis = 0;  // goal stage only
  double dac = 0;  // goal stage only
  friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

/// Optimizer state and progress, carried in checkpoints so training resumes
/// exactly where it stopped.
struct TrainingState {
  std::size_t goal_epochs_done = 0;
  std::size_t planner_epochs_done = 0;
  nn::Adam goal_optimizer;
  nn::Adam planner_optimizer;
  std::vector<EpochLog> log;
};

TrainingState initial_training_state(const RunConfig& config);

struct LoadedModel {
  std::unique_ptr<GoalFlowModel> model;
  TrainingState training;
};

void save_model(const std::filesystem::path& path, const GoalFlowModel& model, const TrainingState& training);
/// Throws nn::CheckpointError for unreadable files or inconsistent contents.
LoadedModel load_model(const std::filesystem::path& path);

/// Config of a loaded model with inference-time overrides applied. Throws
/// ConfigError when an override changes the architecture or vocabulary size.
RunConfig with_runtime_overrides(const RunConfig& trained, const RunConfig& requested);

}  // namespace goalflow::app
