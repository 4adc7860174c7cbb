#pragma once

#include <vector>

#include "goalflow/scenario/kinematics.hpp"
#include "goalflow/scenario/types.hpp"

namespace goalflow::selector {

struct MetricOptions {
  double ttc_horizon_s = 1.0;
  double ttc_step_s = 0.1;
  scenario::ComfortBounds comfort;
  /// Off: driving-direction compliance is fixed at 1.
  bool check_direction = false;
  /// Reference progress below this counts as stationary and scores 1.
  double min_reference_progress = 0.1;
};

/// 1 when no waypoint footprint overlaps an agent at that timestamp.
double metric_nc(const scenario::Trajectory& traj, const scenario::Scene& scene);
/// 1 when every footprint corner of every waypoint is strictly inside the drivable area.
double metric_dac(const scenario::Trajectory& traj, const scenario::Scene& scene);
/// 1 when constant-velocity extrapolation from each waypoint stays clear of
/// the agents for the horizon.
double metric_ttc(const scenario::Trajectory& traj, const scenario::Scene& scene, double horizon_s = 1.0,
                  double dt_s = 0.1);
/// 1 when acceleration, jerk and yaw rate stay within the (inclusive) bounds.
double metric_comfort(const scenario::Trajectory& traj, const scenario::ComfortBounds& bounds = {});
/// Centerline progress relative to the reference trajectory, clipped to [0, 1].
double metric_ep(const scenario::Trajectory& traj, const scenario::Scene& scene,
                 const scenario::Trajectory& reference, double min_reference_progress = 0.1);
/// 1 when every waypoint heading is within 90 degrees of the nearby centerline direction.
double metric_ddc(const scenario::Trajectory& traj, const scenario::Scene& scene);

struct MetricReport {
  double nc = 0, dac = 0, ttc = 0, cf = 0, ep = 0, ddc = 1, pdm = 0;
};

/// nc * dac * ttc * (5 ep + 5 cf + 2 ddc) / 12. Throws std::invalid_argument
/// for any subscore outside [0, 1].
double pdm_score(double nc, double dac, double ttc, double ep, double cf, double ddc = 1.0);

MetricReport evaluate(const scenario::Trajectory& traj, const scenario::Scene& scene,
                      const scenario::Trajectory& reference, const MetricOptions& options = {});

}  // namespace goalflow::selector
