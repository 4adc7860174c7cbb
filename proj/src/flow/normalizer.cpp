#include "goalflow/flow/normalizer.hpp"

#include <cmath>
#include <stdexcept>

namespace goalflow::flow {

namespace {

Scalar channel(const scenario::Pose& p, std::size_t c) { return c == 0 ? p.x : c == 1 ? p.y : p.heading; }

}  // namespace

TrajectoryNormalizer::TrajectoryNormalizer(std::array<Scalar, kChannels> mean,
                                           std::array<Scalar, kChannels> stddev)
    : mean_(mean), std_(stddev), ready_(true) {
  for (Scalar s : std_) {
    if (!(s > 0) || !std::isfinite(s)) throw std::invalid_argument("normalizer: standard deviations must be positive");
  }
}

TrajectoryNormalizer TrajectoryNormalizer::fit(const std::vector<scenario::Trajectory>& trajectories) {
  if (trajectories.empty()) throw std::invalid_argument("normalizer: no trajectories to fit");
  std::array<Scalar, kChannels> mean{0, 0, 0}, stddev{0, 0, 0};
  const Scalar n = static_cast<Scalar>(trajectories.size() * scenario::kHorizon);
  for (const auto& t : trajectories)
    for (const auto& p : t.poses)
      for (std::size_t c = 0; c < kChannels; ++c) mean[c] += channel(p, c);
  for (auto& m : mean) m /= n;
  for (const auto& t : trajectories)
    for (const auto& p : t.poses)
      for (std::size_t c = 0; c < kChannels; ++c) stddev[c] += (channel(p, c) - mean[c]) * (channel(p, c) - mean[c]);
  for (auto& s : stddev) s = std::max(std::sqrt(s / n), 1e-3);
  return {mean, stddev};
}

void TrajectoryNormalizer::require_ready() const {
  if (!ready_) throw std::logic_error("trajectory normalizer has no statistics");
}

Tensor TrajectoryNormalizer::normalize(const scenario::Trajectory& traj) const {
  require_ready();
  Tensor out({scenario::kHorizon, kChannels});
  for (std::size_t i = 0; i < scenario::kHorizon; ++i)
    for (std::size_t c = 0; c < kChannels; ++c) out.at(i, c) = (channel(traj.poses[i], c) - mean_[c]) / std_[c];
  return out;
}

scenario::Trajectory TrajectoryNormalizer::denormalize(std::span<const Scalar> values) const {
  require_ready();
  if (values.size() != kTrajValues) throw std::invalid_argument("denormalize: expected 24 values");
  scenario::Trajectory t;
  for (std::size_t i = 0; i < scenario::kHorizon; ++i) {
    const Scalar* v = values.data() + i * kChannels;
    t.poses[i] = {v[0] * std_[0] + mean_[0], v[1] * std_[1] + mean_[1], v[2] * std_[2] + mean_[2]};
  }
  return t;
}

std::array<Scalar, kChannels> TrajectoryNormalizer::normalize_pose(const scenario::Pose& p) const {
  require_ready();
  std::array<Scalar, kChannels> out;
  for (std::size_t c = 0; c < kChannels; ++c) out[c] = (channel(p, c) - mean_[c]) / std_[c];
  return out;
}

nlohmann::json TrajectoryNormalizer::to_json() const {
  require_ready();
  return {{"mean", mean_}, {"std", std_}};
}

TrajectoryNormalizer TrajectoryNormalizer::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("mean") || !j.contains("std")) {
    throw std::invalid_argument("normalizer: statistics missing");
  }
  return {j.at("mean").get<std::array<Scalar, kChannels>>(), j.at("std").get<std::array<Scalar, kChannels>>()};
}

}  // namespace goalflow::flow
