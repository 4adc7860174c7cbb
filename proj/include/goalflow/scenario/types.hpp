#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace goalflow::scenario {

struct Vec2 {
  double x = 0;
  double y = 0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Planar pose in meters / radians.
struct Pose {
  double x = 0;
  double y = 0;
  double heading = 0;
  friend bool operator==(const Pose&, const Pose&) = default;
};

/// Goal point (x, y, heading); same layout as a pose.
using GoalPoint = Pose;

/// Half-length along the heading, half-width across it.
struct HalfExtents {
  double length = 2.4;
  double width = 1.0;
  friend bool operator==(const HalfExtents&, const HalfExtents&) = default;
};

using Polygon = std::vector<Vec2>;
using Polyline = std::vector<Vec2>;

struct EgoStatus {
  Vec2 velocity;
  Vec2 acceleration;
  double heading = 0;
  HalfExtents half_extents;
  friend bool operator==(const EgoStatus&, const EgoStatus&) = default;
};

struct AgentState {
  Vec2 center;
  double heading = 0;
  HalfExtents half_extents;
  Vec2 velocity;
  friend bool operator==(const AgentState&, const AgentState&) = default;
};

enum class ScenarioKind { Straight, Left, Right, Yield };

std::string to_string(ScenarioKind kind);
/// Throws std::invalid_argument on unknown names.
ScenarioKind kind_from_string(const std::string& name);

/// World a plan is scored against, in the ego frame at t=0 (ego at the
/// origin heading +x).
struct Scene {
  Polygon drivable_area;
  Polyline centerline;
  std::vector<AgentState> agents;
  EgoStatus ego;
  ScenarioKind kind = ScenarioKind::Straight;
  friend bool operator==(const Scene&, const Scene&) = default;
};

inline constexpr std::size_t kHorizon = 8;
inline constexpr double kStepSeconds = 0.5;

/// 8 poses at 0.5 s spacing (t = 0.5 .. 4.0 s).
struct Trajectory {
  std::array<Pose, kHorizon> poses{};
  const Pose& back() const { return poses.back(); }
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct Sample {
  Scene scene;
  Trajectory tau_gt;
  GoalPoint goal_gt;
  friend bool operator==(const Sample&, const Sample&) = default;
};

}  // namespace goalflow::scenario
