#pragma once

#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "goalflow/app/pipeline.hpp"

namespace goalflow::app {

/// Config sources shared by every command. Precedence is flag overrides,
/// then the config file, then `base` (defaults or a checkpoint's config).
struct ConfigSources {
  std::optional<std::filesystem::path> file;
  std::map<std::string, std::string> overrides;
};

RunConfig resolve_config(const ConfigSources& sources, const RunConfig& base = {});

enum class Split { Train, Eval };

/// Writes `train_samples` scenes from data_seed or `eval_samples` from eval_seed.
void cmd_gen_data(const ConfigSources& sources, Split split, const std::filesystem::path& out, std::ostream& log);

/// Clusters the dataset's ground-truth endpoints into vocab_size points.
void cmd_build_vocab(const ConfigSources& sources, const std::filesystem::path& dataset,
                     const std::filesystem::path& out, std::ostream& log);

struct TrainArgs {
  std::filesystem::path dataset;
  std::optional<std::filesystem::path> vocab;        // required unless resuming
  std::optional<std::filesystem::path> resume;       // continue a checkpoint
  std::optional<std::filesystem::path> warm_start;   // reuse a finished goal stage
  std::filesystem::path out;
  std::size_t max_epochs = std::numeric_limits<std::size_t>::max();
};

/// Trains and writes a checkpoint after every epoch.
void cmd_train(const ConfigSources& sources, const TrainArgs& args, std::ostream& log);

struct InferArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path dataset;
  std::size_t index = 0;
  Variant variant = Variant::GoalFlow;
  std::filesystem::path out;  // timing goes to <out>.timing.json
};

void cmd_infer(const ConfigSources& sources, const InferArgs& args, std::ostream& log);

struct EvalArgs {
  std::filesystem::path checkpoint;  // unused for the human variant
  std::filesystem::path dataset;
  Variant variant = Variant::GoalFlow;
  std::filesystem::path out;                 // JSON report; timing goes to <out>.timing.json
  std::optional<std::filesystem::path> csv;  // per-sample table
};

EvalReport cmd_eval(const ConfigSources& sources, const EvalArgs& args, std::ostream& log);

enum class AblationAxis { Steps, Sigma };

struct AblateArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path dataset;
  AblationAxis axis = AblationAxis::Steps;
  std::vector<double> values;
  /// Sigma axis: one checkpoint per value trained at that sigma. When empty,
  /// `checkpoint` is reused for every value and rows are flagged.
  std::vector<std::filesystem::path> checkpoints;
  std::filesystem::path out;  // CSV
};

struct AblationRow {
  double value = 0;
  selector::MetricReport mean;
  double denoise_ms = 0;
  std::string model;  // checkpoint path, or "reused"
};

std::vector<AblationRow> cmd_ablate(const ConfigSources& sources, const AblateArgs& args, std::ostream& log);
std::string ablation_to_csv(AblationAxis axis, const std::vector<AblationRow>& rows);

}  // namespace goalflow::app
