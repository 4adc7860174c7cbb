#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "goalflow/flow/normalizer.hpp"
#include "goalflow/flow/rectified_flow.hpp"
#include "goalflow/flow/velocity_net.hpp"
#include "goalflow/scenario/types.hpp"

namespace goalflow::flow {

struct SamplingOptions {
  std::size_t candidates = 32;
  std::size_t n_steps = 5;
  Scalar sigma = 0.1;
  Scalar shift = 1.0;
  std::uint64_t seed = 0;
};

/// [M, 24] Gaussian noise; row m uses its own stream derived from (seed, m),
/// so a candidate does not depend on how many others are drawn.
Tensor draw_noise(std::size_t candidates, Scalar sigma, std::uint64_t seed);

/// Integrates an arbitrary field from fresh noise and denormalizes.
std::vector<scenario::Trajectory> sample_with_field(const VelocityField& field,
                                                    const TrajectoryNormalizer& normalizer,
                                                    const SamplingOptions& options);

/// Samples M trajectories from the learned field. `env` is the [1, d] scene
/// condition; without a goal the goal token is replaced by its null
/// embedding. Runs without recording gradients.
std::vector<scenario::Trajectory> sample_trajectories(const VelocityNet& net,
                                                      const TrajectoryNormalizer& normalizer,
                                                      const Var& env,
                                                      const std::optional<scenario::GoalPoint>& goal,
                                                      const SamplingOptions& options);

/// Candidates emitted for one scene together with how they were produced.
struct CandidateSet {
  std::uint64_t seed = 0;
  std::size_t n_steps = 0;
  Scalar sigma = 0;
  Scalar shift = 1;
  std::optional<scenario::GoalPoint> goal;
  std::vector<scenario::Trajectory> candidates;
};

nlohmann::json candidate_set_to_json(const CandidateSet& set);
CandidateSet candidate_set_from_json(const nlohmann::json& j);

}  // namespace goalflow::flow
