#include "goalflow/app/config.hpp"

#include <cmath>

#include "goalflow/scenario/dataset_io.hpp"

namespace goalflow::scenario {
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(KindMix, straight, left, right, yield)
}  // namespace goalflow::scenario

namespace goalflow::app {

using nlohmann::json;

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(RunConfig, data_seed, eval_seed, train_seed, vocab_seed, infer_seed,
                                   train_samples, eval_samples, kind_mix, vocab_size, dim, layers, heads,
                                   scorer_layers, sigma, n_steps, candidates, p_mask, schedule_shift, w1, w2, w4,
                                   w5, lambda1, lambda2, eps_clamp, shadow_threshold, lr, beta1, beta2, batch_size,
                                   goal_epochs, planner_epochs, ttc_horizon, check_direction)

namespace {

/// Throws for keys of `j` missing from `reference` or holding a value of
/// the wrong kind, recursing into objects.
void reject_unknown(const json& j, const json& reference, const std::string& prefix) {
  if (!j.is_object()) throw ConfigError(prefix.empty() ? "<root>" : prefix, "expected an object");
  for (const auto& [key, value] : j.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    auto it = reference.find(key);
    if (it == reference.end()) throw ConfigError(path, "unknown key");
    if (it->is_object()) {
      reject_unknown(value, *it, path);
    } else if (it->is_number_unsigned() && !value.is_number_unsigned()) {
      throw ConfigError(path, "expected a non-negative integer, got " + value.dump());
    } else if (it->is_number_float() && !value.is_number()) {
      throw ConfigError(path, "expected a number, got " + value.dump());
    } else if (it->is_boolean() && !value.is_boolean()) {
      throw ConfigError(path, "expected true or false, got " + value.dump());
    }
  }
}

void require(bool ok, const char* key, const std::string& what) {
  if (!ok) throw ConfigError(key, what);
}

}  // namespace

json config_to_json(const RunConfig& config) { return config; }

void validate(const RunConfig& c) {
  require(c.train_samples > 0, "train_samples", "must be positive");
  require(c.eval_samples > 0, "eval_samples", "must be positive");
  const auto& m = c.kind_mix;
  require(m.straight >= 0 && m.left >= 0 && m.right >= 0 && m.yield >= 0, "kind_mix", "weights must be non-negative");
  require(m.straight + m.left + m.right + m.yield > 0, "kind_mix", "weights must have a positive sum");
  require(c.vocab_size >= 2, "vocab_size", "must be at least 2");
  require(c.dim >= 2 && c.dim % 2 == 0, "dim", "must be even and at least 2");
  require(c.heads >= 1 && c.dim % c.heads == 0, "heads", "must divide dim");
  require(c.layers >= 1, "layers", "must be at least 1");
  require(c.scorer_layers >= 1, "scorer_layers", "must be at least 1");
  require(c.sigma > 0 && std::isfinite(c.sigma), "sigma", "must be positive");
  require(c.n_steps >= 1, "n_steps", "must be at least 1");
  require(c.candidates >= 1, "candidates", "must be at least 1");
  require(c.p_mask >= 0 && c.p_mask < 1, "p_mask", "must be in [0, 1)");
  require(c.schedule_shift > 0, "schedule_shift", "must be positive");
  require(c.w1 >= 0, "w1", "must be non-negative");
  require(c.w2 >= 0, "w2", "must be non-negative");
  require(c.w4 >= 0, "w4", "must be non-negative");
  require(c.w5 >= 0, "w5", "must be non-negative");
  require(c.lambda1 >= 0, "lambda1", "must be non-negative");
  require(c.lambda2 >= 0, "lambda2", "must be non-negative");
  require(c.eps_clamp > 0 && c.eps_clamp < 1, "eps_clamp", "must be in (0, 1)");
  require(c.shadow_threshold >= 0, "shadow_threshold", "must be non-negative");
  require(c.lr > 0, "lr", "must be positive");
  require(c.beta1 >= 0 && c.beta1 < 1, "beta1", "must be in [0, 1)");
  require(c.beta2 >= 0 && c.beta2 < 1, "beta2", "must be in [0, 1)");
  require(c.batch_size >= 1, "batch_size", "must be at least 1");
  require(c.ttc_horizon > 0, "ttc_horizon", "must be positive");
}

RunConfig config_from_json(const json& j, const RunConfig& base) {
  json merged = config_to_json(base);
  reject_unknown(j, merged, "");
  merged.merge_patch(j);
  RunConfig out = merged.get<RunConfig>();
  validate(out);
  return out;
}

RunConfig load_config(const std::filesystem::path& path) {
  return config_from_json(scenario::read_json_file(path));
}

RunConfig apply_overrides(const RunConfig& base, const std::map<std::string, std::string>& overrides) {
  json patch = json::object();
  for (const auto& [key, text] : overrides) {
    json value;
    try {
      value = json::parse(text);
    } catch (const json::parse_error&) {
      value = text;
    }
    json* slot = &patch;
    std::size_t start = 0;
    for (std::size_t dot; (dot = key.find('.', start)) != std::string::npos; start = dot + 1) {
      slot = &(*slot)[key.substr(start, dot - start)];
    }
    (*slot)[key.substr(start)] = value;
  }
  return config_from_json(patch, base);
}

}  // namespace goalflow::app
