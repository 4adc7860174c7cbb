#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "goalflow/scenario/generator.hpp"

namespace goalflow::app {

/// Invalid or unknown configuration entry; `key` names the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error("config '" + key + "': " + what), key(std::move(key)) {}
  std::string key;
};

struct RunConfig {
  // seeds
  std::uint64_t data_seed = 1;
  std::uint64_t eval_seed = 2;
  std::uint64_t train_seed = 3;
  std::uint64_t vocab_seed = 4;
  std::uint64_t infer_seed = 5;

  // dataset
  std::size_t train_samples = 2000;
  std::size_t eval_samples = 200;
  scenario::KindMix kind_mix;

  // goal vocabulary
  std::size_t vocab_size = 256;

  // model
  std::size_t dim = 128;
  std::size_t layers = 4;
  std::size_t heads = 4;
  std::size_t scorer_layers = 2;

  // flow
  double sigma = 0.1;
  std::size_t n_steps = 5;
  std::size_t candidates = 32;
  double p_mask = 0.1;
  double schedule_shift = 1.0;

  // goal and trajectory scoring
  double w1 = 1.0;
  double w2 = 0.1;
  double w4 = 1.0;
  double w5 = 0.005;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double eps_clamp = 1e-6;
  double shadow_threshold = 2.0;

  // optimizer
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::size_t batch_size = 64;
  std::size_t goal_epochs = 10;
  std::size_t planner_epochs = 10;

  // evaluation
  double ttc_horizon = 1.0;
  bool check_direction = false;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

nlohmann::json config_to_json(const RunConfig& config);
/// Starts from `base` and applies the entries of `j`. Unknown keys and
/// invalid values throw ConfigError naming the key.
RunConfig config_from_json(const nlohmann::json& j, const RunConfig& base = {});
/// Throws ConfigError for the first invalid field.
void validate(const RunConfig& config);

/// Reads a JSON config file on top of the defaults.
RunConfig load_config(const std::filesystem::path& path);

/// Parses "key=value" overrides (value as JSON when it parses, else as a
/// string) and applies them on top of `base`. Nested keys use dots
/// ("kind_mix.yield=0.5").
RunConfig apply_overrides(const RunConfig& base, const std::map<std::string, std::string>& overrides);

}  // namespace goalflow::app
