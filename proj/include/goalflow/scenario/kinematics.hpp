#pragma once

#include <vector>

#include "goalflow/scenario/types.hpp"

namespace goalflow::scenario {

/// Finite-difference motion profile of a trajectory, with the ego origin
/// (0, 0, 0) prepended as the t=0 pose.
struct MotionProfile {
  std::vector<double> accel;     // |a| in m/s^2, 7 values
  std::vector<double> jerk;      // |j| in m/s^3, 6 values
  std::vector<double> yaw_rate;  // |dtheta/dt| in rad/s, 8 values
  std::vector<Vec2> velocity;    // m/s at each of the 8 poses (backward difference)
};

MotionProfile motion_profile(const Trajectory& traj);

struct ComfortBounds {
  double max_accel = 4.9;
  double max_jerk = 8.4;
  double max_yaw_rate = 0.95;
};

/// Inclusive bounds.
bool within_comfort(const MotionProfile& profile, const ComfortBounds& bounds);

/// Ego footprint overlaps an agent (propagated at constant velocity) at any
/// of the 8 waypoint timestamps.
bool collides_at_waypoints(const Trajectory& traj, const HalfExtents& ego,
                           const std::vector<AgentState>& agents);

/// From every waypoint, the ego extrapolated at its local velocity and the
/// agents at constant velocity overlap within `horizon_s`, checked every `dt_s`.
bool collides_within_horizon(const Trajectory& traj, const HalfExtents& ego,
                             const std::vector<AgentState>& agents, double horizon_s,
                             double dt_s);

/// Ego pose at arbitrary time by linear interpolation between waypoints
/// (origin at t=0), extrapolated at the final velocity beyond 4 s.
Pose interpolate_pose(const Trajectory& traj, double t);

}  // namespace goalflow::scenario
