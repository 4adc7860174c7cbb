#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "goalflow/nn/param_store.hpp"

namespace goalflow::nn {

struct AdamConfig {
  Scalar lr = 3e-4;
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar eps = 1e-8;
};

/// Adam with bias correction. Moment buffers are keyed by parameter name, so
/// one optimizer can drive any subset of a ParamStore.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// One update from the gradients currently stored on `params`. Parameters
  /// without a gradient are treated as having a zero gradient.
  void step(const ParamStore& params);

  std::int64_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  void set_lr(Scalar lr) { config_.lr = lr; }

  /// Moment buffers as "<prefix>m.<name>" / "<prefix>v.<name>" for checkpoints.
  std::map<std::string, Tensor> export_state(const std::string& prefix) const;
  void import_state(const std::map<std::string, Tensor>& tensors, const std::string& prefix,
                    std::int64_t steps);

 private:
  AdamConfig config_;
  std::int64_t steps_ = 0;
  std::map<std::string, Tensor> m_, v_;
};

}  // namespace goalflow::nn
