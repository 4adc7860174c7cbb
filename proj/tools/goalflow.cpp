#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "goalflow/app/commands.hpp"
#include "goalflow/nn/checkpoint.hpp"
#include "goalflow/scenario/dataset_io.hpp"

namespace {

using namespace goalflow::app;

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

/// Options every subcommand accepts.
struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::map<std::string, std::string> shorthands;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--set", sets, "Override a config key, KEY=VALUE (repeatable)");
  }

  /// Adds a flag that overrides config key `key`.
  void shorthand(CLI::App* cmd, const std::string& flag, const std::string& key, const std::string& help) {
    cmd->add_option_function<std::string>(flag, [this, key](const std::string& v) { shorthands[key] = v; }, help);
  }

  ConfigSources sources() const {
    ConfigSources s;
    if (!config.empty()) s.file = config;
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError(kv, "expected KEY=VALUE");
      s.overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    for (const auto& [k, v] : shorthands) s.overrides[k] = v;
    return s;
  }
};

Variant parse_variant(const std::string& name) {
  try {
    return variant_from_string(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("variant", e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal-conditioned flow-matching trajectory planner"};
  app.require_subcommand(1);

  Common common;
  std::string out, dataset, vocab, checkpoint, resume, warm_start, split = "train", variant = "goalflow",
                                                                   csv, axis = "steps";
  std::size_t index = 0, max_epochs = std::numeric_limits<std::size_t>::max();
  std::vector<double> values;
  std::vector<std::string> checkpoints;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  common.attach(gen);
  gen->add_option("--split", split, "train or eval")->check(CLI::IsMember({"train", "eval"}));
  gen->add_option("--out", out, "Dataset file")->required();
  common.shorthand(gen, "--seed", "data_seed", "Dataset seed (train split)");
  common.shorthand(gen, "--count", "train_samples", "Sample count (train split)");

  auto* bv = app.add_subcommand("build-vocab", "Cluster ground-truth endpoints into a goal vocabulary");
  common.attach(bv);
  bv->add_option("--dataset", dataset)->required()->check(CLI::ExistingFile);
  bv->add_option("--out", out, "Vocabulary file")->required();
  common.shorthand(bv, "--size", "vocab_size", "Vocabulary size N");
  common.shorthand(bv, "--seed", "vocab_seed", "Clustering seed");

  auto* tr = app.add_subcommand("train", "Train the goal scorer, then the flow planner");
  common.attach(tr);
  tr->add_option("--dataset", dataset)->required()->check(CLI::ExistingFile);
  auto* vocab_opt = tr->add_option("--vocab", vocab)->check(CLI::ExistingFile);
  auto* resume_opt = tr->add_option("--resume", resume, "Continue from a checkpoint")->check(CLI::ExistingFile);
  auto* warm_opt =
      tr->add_option("--warm-start", warm_start, "Reuse the goal stage of a checkpoint")->check(CLI::ExistingFile);
  resume_opt->excludes(vocab_opt)->excludes(warm_opt);
  warm_opt->excludes(vocab_opt);
  tr->add_option("--out", out, "Checkpoint file")->required();
  tr->add_option("--max-epochs", max_epochs, "Stop after this many epochs in this run");
  common.shorthand(tr, "--seed", "train_seed", "Training seed");
  common.shorthand(tr, "--sigma", "sigma", "Noise scale of x0");

  auto* inf = app.add_subcommand("infer", "Plan one scene and write the candidate record");
  common.attach(inf);
  inf->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  inf->add_option("--dataset", dataset)->required()->check(CLI::ExistingFile);
  inf->add_option("--index", index, "Sample index in the dataset");
  inf->add_option("--variant", variant, "goalflow, goal-mean, base, oracle or oracle-mean");
  inf->add_option("--out", out, "Inference record")->required();

  auto* ev = app.add_subcommand("eval", "Evaluate a planner variant on a dataset");
  common.attach(ev);
  ev->add_option("--checkpoint", checkpoint, "Model checkpoint (not needed for --variant human)")
      ->check(CLI::ExistingFile);
  ev->add_option("--dataset", dataset)->required()->check(CLI::ExistingFile);
  ev->add_option("--variant", variant, "goalflow, goal-mean, base, oracle, oracle-mean or human");
  ev->add_option("--out", out, "JSON report")->required();
  ev->add_option("--csv", csv, "Per-sample CSV table");

  auto* ab = app.add_subcommand("ablate", "Sweep denoising steps or noise scale");
  common.attach(ab);
  ab->add_option("--checkpoint", checkpoint)->check(CLI::ExistingFile);
  ab->add_option("--checkpoints", checkpoints, "Sigma axis: one checkpoint per value")
      ->check(CLI::ExistingFile);
  ab->add_option("--dataset", dataset)->required()->check(CLI::ExistingFile);
  ab->add_option("--axis", axis)->check(CLI::IsMember({"steps", "sigma"}));
  ab->add_option("--values", values)->required()->delimiter(',');
  ab->add_option("--out", out, "CSV table")->required();

  for (auto* cmd : {inf, ev, ab}) {
    common.shorthand(cmd, "--seed", "infer_seed", "Sampling seed");
    common.shorthand(cmd, "--n-steps", "n_steps", "Denoising steps");
    common.shorthand(cmd, "--candidates", "candidates", "Candidates per scene");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    const ConfigSources sources = common.sources();
    if (gen->parsed()) {
      cmd_gen_data(sources, split == "eval" ? Split::Eval : Split::Train, out, std::cout);
    } else if (bv->parsed()) {
      cmd_build_vocab(sources, dataset, out, std::cout);
    } else if (tr->parsed()) {
      TrainArgs a{dataset, {}, {}, {}, out, max_epochs};
      if (!vocab.empty()) a.vocab = vocab;
      if (!resume.empty()) a.resume = resume;
      if (!warm_start.empty()) a.warm_start = warm_start;
      if (!a.vocab && !a.resume && !a.warm_start) throw ConfigError("vocab", "one of --vocab, --resume or --warm-start is required");
      cmd_train(sources, a, std::cout);
    } else if (inf->parsed()) {
      const Variant v = parse_variant(variant);
      if (v == Variant::Human) throw ConfigError("variant", "infer needs a model variant");
      cmd_infer(sources, {checkpoint, dataset, index, v, out}, std::cout);
    } else if (ev->parsed()) {
      EvalArgs a{checkpoint, dataset, parse_variant(variant), out, {}};
      if (a.variant != Variant::Human && checkpoint.empty()) throw ConfigError("checkpoint", "required for this variant");
      if (!csv.empty()) a.csv = csv;
      cmd_eval(sources, a, std::cout);
    } else if (ab->parsed()) {
      AblateArgs a;
      a.checkpoint = checkpoint;
      a.dataset = dataset;
      a.axis = axis == "sigma" ? AblationAxis::Sigma : AblationAxis::Steps;
      a.values = values;
      for (const auto& c : checkpoints) a.checkpoints.emplace_back(c);
      a.out = out;
      if (checkpoint.empty() && a.checkpoints.empty()) throw ConfigError("checkpoint", "a checkpoint is required");
      if (a.axis == AblationAxis::Steps && checkpoint.empty()) throw ConfigError("checkpoint", "required for the steps axis");
      cmd_ablate(sources, a, std::cout);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return 0;
}
