#include "goalflow/app/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "goalflow/scenario/dataset_io.hpp"

namespace goalflow::app {

namespace {

using nn::Var;

constexpr std::uint64_t kCandidateStream = 0;
constexpr std::uint64_t kShadowStream = 1;

scenario::Trajectory average(const std::vector<scenario::Trajectory>& trajs) {
  scenario::Trajectory out;
  for (std::size_t k = 0; k < scenario::kHorizon; ++k) {
    double x = 0, y = 0, c = 0, s = 0;
    for (const auto& t : trajs) {
      x += t.poses[k].x;
      y += t.poses[k].y;
      c += std::cos(t.poses[k].heading);
      s += std::sin(t.poses[k].heading);
    }
    const double n = static_cast<double>(trajs.size());
    out.poses[k] = {x / n, y / n, std::atan2(s, c)};
  }
  return out;
}

flow::SamplingOptions sampling(const RunConfig& c, std::size_t count, std::uint64_t seed) {
  return {count, c.n_steps, c.sigma, c.schedule_shift, seed};
}

nlohmann::json metrics_json(const selector::MetricReport& m) {
  return {{"nc", m.nc}, {"dac", m.dac}, {"ttc", m.ttc}, {"cf", m.cf}, {"ep", m.ep}, {"ddc", m.ddc}, {"pdm", m.pdm}};
}

std::string fixed(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::GoalFlow: return "goalflow";
    case Variant::GoalMean: return "goal-mean";
    case Variant::Base: return "base";
    case Variant::Oracle: return "oracle";
    case Variant::OracleMean: return "oracle-mean";
    case Variant::Human: return "human";
  }
  return "goalflow";
}

Variant variant_from_string(const std::string& name) {
  for (Variant v : {Variant::GoalFlow, Variant::GoalMean, Variant::Base, Variant::Oracle, Variant::OracleMean,
                    Variant::Human}) {
    if (to_string(v) == name) return v;
  }
  throw std::invalid_argument("unknown variant '" + name +
                              "' (expected goalflow, goal-mean, base, oracle, oracle-mean or human)");
}

bool predicts_goal(Variant v) { return v == Variant::GoalFlow || v == Variant::GoalMean; }

bool averages_candidates(Variant v) {
  return v == Variant::GoalMean || v == Variant::Base || v == Variant::OracleMean;
}

goal::GoalScoreSet score_goals(const GoalFlowModel& model, const scenario::Scene& scene, const RunConfig& config) {
  nn::NoGradGuard guard;
  const Var tokens = model.encoder().encode_scene(scene);
  const Var ego = model.encoder().encode_ego(scene.ego);
  const auto out = model.scorer().forward(tokens, ego, 1);
  const auto fin = goal::final_scores(out.dis.value().data(), out.dac.value().data(), config.w1, config.w2,
                                      config.eps_clamp);
  nn::Tensor final_t({fin.scores.size()}, fin.scores);
  return {out.dis.value().reshaped({fin.scores.size()}), out.dac.value().reshaped({fin.scores.size()}),
          std::move(final_t)};
}

std::uint64_t sample_seed(const RunConfig& config, std::size_t index) {
  return derive_seed(config.infer_seed, index);
}

PlanResult plan(const GoalFlowModel& model, const scenario::Sample& sample, Variant variant,
                const RunConfig& config, std::uint64_t seed) {
  PlanResult r;
  r.variant = variant;
  if (variant == Variant::Human) {
    r.chosen = sample.tau_gt;
    return r;
  }
  nn::NoGradGuard guard;
  const auto& scene = sample.scene;
  const Var tokens = model.encoder().encode_scene(scene);
  const Var ego = model.encoder().encode_ego(scene.ego);
  const Var env = model.encoder().env_condition(tokens, ego, 1);
  const auto& normalizer = model.statistics().normalizer;
  using clock = std::chrono::steady_clock;

  std::optional<scenario::GoalPoint> goal;
  if (predicts_goal(variant)) {
    const auto out = model.scorer().forward(tokens, ego, 1);
    const auto fin = goal::final_scores(out.dis.value().data(), out.dac.value().data(), config.w1, config.w2,
                                        config.eps_clamp);
    const std::size_t i = fin.best;
    r.goal = GoalChoice{i, model.vocabulary().points[i], out.dis.value()[i], out.dac.value()[i], fin.scores[i]};
    goal = r.goal->point;
  } else if (variant == Variant::Oracle || variant == Variant::OracleMean) {
    goal = sample.goal_gt;
  }

  const auto opts = sampling(config, config.candidates, derive_seed(seed, kCandidateStream));
  const auto start = clock::now();
  auto candidates = flow::sample_trajectories(model.planner(), normalizer, env, goal, opts);
  std::optional<scenario::Trajectory> shadow;
  if (variant == Variant::GoalFlow) {
    shadow = flow::sample_trajectories(model.planner(), normalizer, env, std::nullopt,
                                       sampling(config, 1, derive_seed(seed, kShadowStream)))
                 .front();
  }
  r.denoise_seconds = std::chrono::duration<double>(clock::now() - start).count();
  r.candidates = {opts.seed, opts.n_steps, opts.sigma, opts.shift, goal, std::move(candidates)};

  if (averages_candidates(variant)) {
    r.chosen = average(r.candidates.candidates);
    return r;
  }
  r.selection = selector::score_candidates(r.candidates.candidates, *goal, scene.centerline, config.lambda1,
                                           config.lambda2);
  const auto& main = r.candidates.candidates[r.selection->best];
  if (shadow) {
    r.shadow = shadow;
    r.fallback = selector::shadow_fallback(main, *shadow, config.shadow_threshold);
    r.chosen = r.fallback->chosen;
  } else {
    r.chosen = main;
  }
  return r;
}

nlohmann::json plan_to_json(const PlanResult& result, const scenario::Sample& sample, std::size_t index,
                            const RunConfig& config) {
  nlohmann::json j = {{"format", "goalflow-inference"},
                      {"version", 1},
                      {"variant", to_string(result.variant)},
                      {"sample_index", index},
                      {"config", config_to_json(config)},
                      {"scene", scenario::to_json(sample.scene)}};
  if (result.goal) {
    j["goal"] = {{"index", result.goal->index},
                 {"point", scenario::to_json(result.goal->point)},
                 {"dis", result.goal->dis},
                 {"dac", result.goal->dac},
                 {"final", result.goal->final_score}};
  }
  if (result.variant != Variant::Human) j["candidate_set"] = flow::candidate_set_to_json(result.candidates);
  if (result.selection) {
    nlohmann::json scores = nlohmann::json::array();
    for (const auto& s : result.selection->scores) {
      scores.push_back({{"f_dis", s.f_dis}, {"f_pg", s.f_pg}, {"phi_dis", s.phi_dis}, {"phi_pg", s.phi_pg}, {"f", s.f}});
    }
    j["selection"] = {{"lambda1", config.lambda1},
                      {"lambda2", config.lambda2},
                      {"best", result.selection->best},
                      {"trajectory", scenario::to_json(result.candidates.candidates[result.selection->best])},
                      {"scores", scores}};
  }
  if (result.shadow) {
    j["shadow"] = {{"trajectory", scenario::to_json(*result.shadow)},
                   {"threshold", config.shadow_threshold},
                   {"deviation", result.fallback->deviation},
                   {"used_shadow", result.fallback->used_shadow}};
  }
  j["chosen"] = scenario::to_json(result.chosen);
  return j;
}

selector::MetricOptions metric_options(const RunConfig& config) {
  selector::MetricOptions o;
  o.ttc_horizon_s = config.ttc_horizon;
  o.check_direction = config.check_direction;
  return o;
}

double EvalReport::mean_denoise_seconds() const {
  if (denoise_seconds.empty()) return 0;
  double s = 0;
  for (double v : denoise_seconds) s += v;
  return s / static_cast<double>(denoise_seconds.size());
}

EvalReport evaluate_dataset(const GoalFlowModel* model, const std::vector<scenario::Sample>& samples,
                            Variant variant, const RunConfig& config) {
  if (samples.empty()) throw std::invalid_argument("evaluation set is empty");
  if (!model && variant != Variant::Human) throw std::invalid_argument("variant requires a model");
  EvalReport report;
  report.variant = variant;
  report.config = config;
  const auto opts = metric_options(config);
  auto& m = report.mean;
  m = {0, 0, 0, 0, 0, 0, 0};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    PlanResult r;
    if (variant == Variant::Human) {
      r.chosen = s.tau_gt;
    } else {
      r = plan(*model, s, variant, config, sample_seed(config, i));
    }
    SampleMetrics row{i, s.scene.kind, selector::evaluate(r.chosen, s.scene, s.tau_gt, opts),
                      r.fallback && r.fallback->used_shadow, std::nullopt};
    if (r.goal) row.goal_error = std::hypot(r.goal->point.x - s.goal_gt.x, r.goal->point.y - s.goal_gt.y);
    m.nc += row.metrics.nc;
    m.dac += row.metrics.dac;
    m.ttc += row.metrics.ttc;
    m.cf += row.metrics.cf;
    m.ep += row.metrics.ep;
    m.ddc += row.metrics.ddc;
    m.pdm += row.metrics.pdm;
    report.samples.push_back(row);
    report.denoise_seconds.push_back(r.denoise_seconds);
  }
  const double n = static_cast<double>(samples.size());
  for (double* f : {&m.nc, &m.dac, &m.ttc, &m.cf, &m.ep, &m.ddc, &m.pdm}) *f /= n;
  return report;
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  std::size_t shadows = 0;
  double goal_error = 0;
  for (const auto& s : report.samples) {
    auto row = metrics_json(s.metrics);
    row["index"] = s.index;
    row["kind"] = scenario::to_string(s.kind);
    row["used_shadow"] = s.used_shadow;
    if (s.goal_error) {
      row["goal_error"] = *s.goal_error;
      goal_error += *s.goal_error;
    }
    rows.push_back(row);
    shadows += s.used_shadow ? 1 : 0;
  }
  nlohmann::json out = {{"format", "goalflow-report"},
                        {"version", 1},
                        {"variant", to_string(report.variant)},
                        {"config", config_to_json(report.config)},
                        {"count", report.samples.size()},
                        {"shadow_count", shadows},
                        {"mean", metrics_json(report.mean)},
                        {"samples", rows}};
  if (predicts_goal(report.variant)) out["mean_goal_error"] = goal_error / static_cast<double>(rows.size());
  return out;
}

std::string report_to_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "index,kind,nc,dac,ttc,cf,ep,ddc,pdm,used_shadow\n";
  auto metrics = [&](const selector::MetricReport& m) {
    os << fixed(m.nc) << ',' << fixed(m.dac) << ',' << fixed(m.ttc) << ',' << fixed(m.cf) << ',' << fixed(m.ep)
       << ',' << fixed(m.ddc) << ',' << fixed(m.pdm);
  };
  for (const auto& s : report.samples) {
    os << s.index << ',' << scenario::to_string(s.kind) << ',';
    metrics(s.metrics);
    os << ',' << (s.used_shadow ? 1 : 0) << '\n';
  }
  os << "mean,all,";
  metrics(report.mean);
  os << ",\n";
  return os.str();
}

nlohmann::json timing_to_json(const EvalReport& report) {
  return {{"variant", to_string(report.variant)},
          {"n_steps", report.config.n_steps},
          {"candidates", report.config.candidates},
          {"mean_denoise_seconds", report.mean_denoise_seconds()},
          {"denoise_seconds", report.denoise_seconds}};
}

}  // namespace goalflow::app
