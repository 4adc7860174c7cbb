#pragma once

#include <optional>
#include <string>
#include <vector>

#include "goalflow/app/model.hpp"
#include "goalflow/flow/sampler.hpp"
#include "goalflow/selector/metrics.hpp"
#include "goalflow/selector/selector.hpp"

namespace goalflow::app {

/// Planner variants compared in evaluation.
enum class Variant {
  GoalFlow,    // predicted goal, candidate scoring, shadow fallback
  GoalMean,    // predicted goal, candidates averaged
  Base,        // goal condition masked, candidates averaged
  Oracle,      // ground-truth endpoint as goal, candidate scoring
  OracleMean,  // ground-truth endpoint as goal, candidates averaged
  Human,       // ground-truth trajectory
};

bool predicts_goal(Variant v);
bool averages_candidates(Variant v);

std::string to_string(Variant v);
/// Throws std::invalid_argument on unknown names.
Variant variant_from_string(const std::string& name);

struct GoalChoice {
  std::size_t index = 0;
  scenario::GoalPoint point;
  double dis = 0;
  double dac = 0;
  double final_score = 0;
};

/// Everything produced while planning one scene.
struct PlanResult {
  Variant variant = Variant::GoalFlow;
  std::optional<GoalChoice> goal;  // predicted goal
  flow::CandidateSet candidates;   // empty for Human
  std::optional<selector::Selection> selection;
  std::optional<scenario::Trajectory> shadow;
  std::optional<selector::FallbackResult> fallback;
  scenario::Trajectory chosen;
  double denoise_seconds = 0;  // wall clock, excluded from reports
};

/// Predicted goal scores for one scene.
goal::GoalScoreSet score_goals(const GoalFlowModel& model, const scenario::Scene& scene, const RunConfig& config);

/// Plans one sample. `config` supplies the inference settings (steps,
/// candidates, sigma, shift, weights); `seed` drives all sampling noise.
PlanResult plan(const GoalFlowModel& model, const scenario::Sample& sample, Variant variant,
                const RunConfig& config, std::uint64_t seed);

/// Seed used for sample `index` of a run.
std::uint64_t sample_seed(const RunConfig& config, std::size_t index);

/// Inference record for `cmd infer`: scene, candidates, scores, selection,
/// shadow and the returned trajectory. Timing is not part of it.
nlohmann::json plan_to_json(const PlanResult& result, const scenario::Sample& sample, std::size_t index,
                            const RunConfig& config);

struct SampleMetrics {
  std::size_t index = 0;
  scenario::ScenarioKind kind = scenario::ScenarioKind::Straight;
  selector::MetricReport metrics;
  bool used_shadow = false;
  std::optional<double> goal_error;  // planar distance of the predicted goal to the true endpoint, m
};

struct EvalReport {
  Variant variant = Variant::GoalFlow;
  RunConfig config;
  std::vector<SampleMetrics> samples;
  selector::MetricReport mean;
  /// Wall-clock denoising time per sample; kept out of the report files.
  std::vector<double> denoise_seconds;
  double mean_denoise_seconds() const;
};

/// Plans and scores every sample. Throws std::invalid_argument for an empty
/// set.
EvalReport evaluate_dataset(const GoalFlowModel* model, const std::vector<scenario::Sample>& samples,
                            Variant variant, const RunConfig& config);

selector::MetricOptions metric_options(const RunConfig& config);

nlohmann::json report_to_json(const EvalReport& report);
/// One row per sample followed by a "mean" row.
std::string report_to_csv(const EvalReport& report);
nlohmann::json timing_to_json(const EvalReport& report);

}  // namespace goalflow::app
