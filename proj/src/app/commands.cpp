#include "goalflow/app/commands.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "goalflow/app/trainer.hpp"
#include "goalflow/goal/vocabulary.hpp"
#include "goalflow/scenario/dataset_io.hpp"
#include "goalflow/scenario/generator.hpp"

namespace goalflow::app {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::filesystem::path timing_path(const std::filesystem::path& out) {
  return out.string() + ".timing.json";
}

std::vector<scenario::Sample> load_samples(const std::filesystem::path& path) {
  return scenario::load_dataset(path).samples;
}

/// Checkpoint config overlaid with the requested sources.
RunConfig runtime_config(const ConfigSources& sources, const GoalFlowModel& model) {
  return with_runtime_overrides(model.config(), resolve_config(sources, model.config()));
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

RunConfig resolve_config(const ConfigSources& sources, const RunConfig& base) {
  RunConfig c = base;
  if (sources.file) c = config_from_json(scenario::read_json_file(*sources.file), c);
  return apply_overrides(c, sources.overrides);
}

void cmd_gen_data(const ConfigSources& sources, Split split, const std::filesystem::path& out, std::ostream& log) {
  const RunConfig c = resolve_config(sources);
  const bool train = split == Split::Train;
  scenario::Dataset ds;
  ds.seed = train ? c.data_seed : c.eval_seed;
  ds.samples = scenario::generate_dataset(ds.seed, train ? c.train_samples : c.eval_samples, c.kind_mix);
  scenario::save_dataset(out, ds);
  log << "wrote " << ds.samples.size() << " samples (seed " << ds.seed << ") to " << out.string() << '\n';
}

void cmd_build_vocab(const ConfigSources& sources, const std::filesystem::path& dataset,
                     const std::filesystem::path& out, std::ostream& log) {
  const RunConfig c = resolve_config(sources);
  std::vector<scenario::GoalPoint> endpoints;
  for (const auto& s : load_samples(dataset)) endpoints.push_back(s.goal_gt);
  const auto vocab = goal::build_vocabulary(endpoints, c.vocab_size, c.vocab_seed);
  goal::save_vocabulary(out, vocab);
  log << "vocabulary N=" << vocab.size() << " seed=" << vocab.seed << " hash=" << vocab.hash() << '\n';
  for (std::size_t i = 0; i < vocab.inertia_history.size(); ++i) {
    log << "  iteration " << i << " inertia " << num(vocab.inertia_history[i]) << '\n';
  }
}

void cmd_train(const ConfigSources& sources, const TrainArgs& args, std::ostream& log) {
  const auto data = load_samples(args.dataset);
  LoadedModel m;
  if (args.resume) {
    m = load_model(*args.resume);
    RunConfig requested = resolve_config(sources, m.model->config());
    if (requested != m.model->config()) {
      RunConfig only_epochs = m.model->config();
      only_epochs.goal_epochs = requested.goal_epochs;
      only_epochs.planner_epochs = requested.planner_epochs;
      if (only_epochs != requested) throw ConfigError("resume", "only epoch counts may change when resuming");
      if (requested.goal_epochs < m.training.goal_epochs_done) {
        throw ConfigError("goal_epochs", "fewer than the epochs already trained");
      }
      if (requested.planner_epochs < m.training.planner_epochs_done) {
        throw ConfigError("planner_epochs", "fewer than the epochs already trained");
      }
      auto values = m.model->params().values();
      auto training = std::move(m.training);
      m.model = std::make_unique<GoalFlowModel>(requested, m.model->vocabulary(), m.model->statistics());
      m.model->params().load_values(values);
      m.training = std::move(training);
    }
    log << "resuming " << args.resume->string() << " at goal epoch " << m.training.goal_epochs_done
        << ", planner epoch " << m.training.planner_epochs_done << '\n';
  } else if (args.warm_start) {
    const RunConfig c = resolve_config(sources);
    const LoadedModel source = load_model(*args.warm_start);
    m = warm_start_from_goal_stage(*source.model, source.training, c);
    log << "goal stage taken from " << args.warm_start->string() << '\n';
  } else {
    if (!args.vocab) throw ConfigError("vocab", "a vocabulary file is required");
    const RunConfig c = resolve_config(sources);
    auto vocab = goal::load_vocabulary(*args.vocab);
    m.model = std::make_unique<GoalFlowModel>(c, std::move(vocab), fit_statistics(data));
    m.training = initial_training_state(c);
  }
  TrainOptions opts;
  opts.max_epochs = args.max_epochs;
  opts.on_epoch = [&](const EpochLog& e) {
    log << e.stage << " epoch " << e.epoch << " loss " << num(e.loss);
    if (e.stage == "goal") log << " dis " << num(e.dis) << " dac " << num(e.dac);
    log << std::endl;
    save_model(args.out, *m.model, m.training);
  };
  train(*m.model, m.training, data, opts);
  save_model(args.out, *m.model, m.training);
  log << "checkpoint " << args.out.string() << '\n';
}

void cmd_infer(const ConfigSources& sources, const InferArgs& args, std::ostream& log) {
  const auto data = load_samples(args.dataset);
  if (args.index >= data.size()) {
    throw std::out_of_range("sample index " + std::to_string(args.index) + " outside dataset of " +
                            std::to_string(data.size()));
  }
  const LoadedModel m = load_model(args.checkpoint);
  const RunConfig c = runtime_config(sources, *m.model);
  const auto& sample = data[args.index];
  const PlanResult r = plan(*m.model, sample, args.variant, c, sample_seed(c, args.index));
  scenario::write_json_file(args.out, plan_to_json(r, sample, args.index, c));
  scenario::write_json_file(timing_path(args.out), {{"denoise_seconds", r.denoise_seconds}});
  log << "sample " << args.index << ": " << r.candidates.candidates.size() << " candidates";
  if (r.selection) log << ", selected " << r.selection->best;
  if (r.fallback && r.fallback->used_shadow) log << ", shadow trajectory used";
  log << '\n';
}

EvalReport cmd_eval(const ConfigSources& sources, const EvalArgs& args, std::ostream& log) {
  const auto data = load_samples(args.dataset);
  if (data.empty()) throw std::invalid_argument("evaluation set is empty");
  EvalReport report;
  if (args.variant == Variant::Human) {
    report = evaluate_dataset(nullptr, data, args.variant, resolve_config(sources));
  } else {
    const LoadedModel m = load_model(args.checkpoint);
    report = evaluate_dataset(m.model.get(), data, args.variant, runtime_config(sources, *m.model));
  }
  scenario::write_json_file(args.out, report_to_json(report));
  scenario::write_json_file(timing_path(args.out), timing_to_json(report));
  if (args.csv) write_text(*args.csv, report_to_csv(report));
  const auto& mean = report.mean;
  log << to_string(report.variant) << " on " << data.size() << " samples: PDM " << num(mean.pdm) << " NC "
      << num(mean.nc) << " DAC " << num(mean.dac) << " TTC " << num(mean.ttc) << " CF " << num(mean.cf) << " EP "
      << num(mean.ep) << '\n';
  return report;
}

std::vector<AblationRow> cmd_ablate(const ConfigSources& sources, const AblateArgs& args, std::ostream& log) {
  if (args.values.empty()) throw ConfigError("values", "no ablation values given");
  const bool per_value = args.axis == AblationAxis::Sigma && !args.checkpoints.empty();
  if (per_value && args.checkpoints.size() != args.values.size()) {
    throw ConfigError("checkpoints", "need one checkpoint per sigma value");
  }
  const auto data = load_samples(args.dataset);
  std::optional<LoadedModel> shared;
  if (!per_value) shared = load_model(args.checkpoint);
  std::vector<AblationRow> rows;
  for (std::size_t i = 0; i < args.values.size(); ++i) {
    const double v = args.values[i];
    std::optional<LoadedModel> own;
    if (per_value) own = load_model(args.checkpoints[i]);
    const GoalFlowModel& model = per_value ? *own->model : *shared->model;
    RunConfig c = runtime_config(sources, model);
    AblationRow row;
    row.value = v;
    if (args.axis == AblationAxis::Steps) {
      if (v < 1 || v != std::floor(v)) throw ConfigError("values", "step counts must be positive integers");
      c.n_steps = static_cast<std::size_t>(v);
      row.model = args.checkpoint.string();
    } else {
      if (!(v > 0)) throw ConfigError("values", "sigma must be positive");
      if (per_value && std::abs(model.config().sigma - v) > 1e-12) {
        throw ConfigError("checkpoints", args.checkpoints[i].string() + " was trained at sigma " +
                                             num(model.config().sigma) + ", not " + num(v));
      }
      c.sigma = v;
      row.model = per_value ? args.checkpoints[i].string() : "reused";
    }
    validate(c);
    const EvalReport report = evaluate_dataset(&model, data, Variant::GoalFlow, c);
    row.mean = report.mean;
    row.denoise_ms = report.mean_denoise_seconds() * 1e3;
    log << (args.axis == AblationAxis::Steps ? "steps " : "sigma ") << num(v) << ": PDM " << num(row.mean.pdm)
        << " CF " << num(row.mean.cf) << " denoise " << num(row.denoise_ms) << " ms (" << row.model << ")\n";
    rows.push_back(row);
  }
  write_text(args.out, ablation_to_csv(args.axis, rows));
  return rows;
}

std::string ablation_to_csv(AblationAxis axis, const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << (axis == AblationAxis::Steps ? "n_steps" : "sigma") << ",nc,dac,ttc,cf,ep,ddc,pdm,denoise_ms,model\n";
  for (const auto& r : rows) {
    const auto& m = r.mean;
    os << num(r.value) << ',' << num(m.nc) << ',' << num(m.dac) << ',' << num(m.ttc) << ',' << num(m.cf) << ','
       << num(m.ep) << ',' << num(m.ddc) << ',' << num(m.pdm) << ',' << num(r.denoise_ms) << ',' << r.model << '\n';
  }
  return os.str();
}

}  // namespace goalflow::app
