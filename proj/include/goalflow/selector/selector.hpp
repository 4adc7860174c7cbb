#pragma once

#include <span>
#include <vector>

#include "goalflow/scenario/types.hpp"

namespace goalflow::selector {

/// Affine map of the values onto [0, 1] by their min and max; an all-equal
/// set maps to 0.5. Throws std::invalid_argument when empty.
std::vector<double> minimax_normalize(std::span<const double> values);

struct CandidateScore {
  double f_dis = 0;  // endpoint distance to the goal, m
  double f_pg = 0;   // progress along the route centerline, m
  double phi_dis = 0;
  double phi_pg = 0;
  double f = 0;
};

struct Selection {
  std::size_t best = 0;
  std::vector<CandidateScore> scores;
};

/// Progress of a trajectory: centerline arc-length coordinate of its
/// endpoint minus that of the ego origin.
double centerline_progress(const scenario::Trajectory& traj, const scenario::Polyline& centerline);

/// f = -lambda1 * phi(dis) + lambda2 * phi(progress); best is the argmax
/// with ties to the lowest index. Throws std::invalid_argument when there
/// are no candidates.
Selection score_candidates(std::span<const scenario::Trajectory> candidates, const scenario::GoalPoint& goal,
                           const scenario::Polyline& centerline, double lambda1, double lambda2);

/// Mean planar distance between corresponding waypoints.
double mean_deviation(const scenario::Trajectory& a, const scenario::Trajectory& b);

struct FallbackResult {
  scenario::Trajectory chosen;
  bool used_shadow = false;
  double deviation = 0;
};

/// Returns the shadow trajectory (flagging an unreliable goal) when the mean
/// deviation strictly exceeds `threshold_m`, else the main trajectory.
FallbackResult shadow_fallback(const scenario::Trajectory& main, const scenario::Trajectory& shadow,
                               double threshold_m);

}  // namespace goalflow::selector
