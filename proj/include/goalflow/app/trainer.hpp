#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "goalflow/app/model.hpp"

namespace goalflow::app {

struct TrainOptions {
  /// Called after every completed epoch.
  std::function<void(const EpochLog&)> on_epoch;
  /// Stop after this many epochs in this call; the state records progress so
  /// a later call continues where this one stopped.
  std::size_t max_epochs = std::numeric_limits<std::size_t>::max();
};

/// Runs the remaining epochs of both stages. The goal stage updates the
/// token encoder, ego embedding and goal scorer with the goal loss. The
/// planner stage keeps those fixed and updates the velocity network and the
/// env-condition attention with the flow loss. Every epoch draws from its
/// own stream derived from (train_seed, stage, epoch), so resuming from a
/// checkpoint reproduces an uninterrupted run exactly.
void train(GoalFlowModel& model, TrainingState& state, const std::vector<scenario::Sample>& data,
           const TrainOptions& options = {});

/// New model under `config` carrying over the goal stage of `source`. The
/// planner and env-condition attention start from their fresh initialization.
/// Throws ConfigError when `config` changes the architecture or the goal
/// stage settings.
LoadedModel warm_start_from_goal_stage(const GoalFlowModel& source, const TrainingState& source_state,
                                       const RunConfig& config);

}  // namespace goalflow::app
