#pragma once

#include <array>
#include <span>
#include <vector>

#include <json.hpp>

#include "goalflow/nn/tensor.hpp"
#include "goalflow/scenario/types.hpp"

namespace goalflow::flow {

using nn::Scalar;
using nn::Tensor;

inline constexpr std::size_t kChannels = 3;
inline constexpr std::size_t kTrajValues = scenario::kHorizon * kChannels;

/// Per-channel (x, y, heading) z-score over all poses of a dataset.
class TrajectoryNormalizer {
 public:
  TrajectoryNormalizer() = default;
  TrajectoryNormalizer(std::array<Scalar, kChannels> mean, std::array<Scalar, kChannels> stddev);

  static TrajectoryNormalizer fit(const std::vector<scenario::Trajectory>& trajectories);

  bool ready() const { return ready_; }
  const std::array<Scalar, kChannels>& mean() const { return mean_; }
  const std::array<Scalar, kChannels>& stddev() const { return std_; }

  /// [8, 3]. Throws std::logic_error when no statistics are loaded.
  Tensor normalize(const scenario::Trajectory& traj) const;
  /// Accepts any tensor holding 24 values in pose-major order.
  scenario::Trajectory denormalize(std::span<const Scalar> values) const;
  /// Single pose with the same channel statistics.
  std::array<Scalar, kChannels> normalize_pose(const scenario::Pose& p) const;

  nlohmann::json to_json() const;
  static TrajectoryNormalizer from_json(const nlohmann::json& j);
  friend bool operator==(const TrajectoryNormalizer&, const TrajectoryNormalizer&) = default;

 private:
  void require_ready() const;

  std::array<Scalar, kChannels> mean_{0, 0, 0};
  std::array<Scalar, kChannels> std_{1, 1, 1};
  bool ready_ = false;
};

}  // namespace goalflow::flow
