#pragma once

#include <array>

#include "goalflow/scenario/types.hpp"

namespace goalflow::scenario {

using Corners = std::array<Vec2, 4>;

/// True iff p lies strictly inside the polygon; points on the boundary are
/// outside. Throws std::invalid_argument for fewer than 3 vertices or zero area.
bool point_in_polygon(const Vec2& p, const Polygon& poly);

/// Signed shoelace area (positive for counter-clockwise order).
double polygon_area(const Polygon& poly);
/// No two non-adjacent edges intersect.
bool polygon_is_simple(const Polygon& poly);

/// Box corners in order front-left, front-right, rear-right, rear-left.
Corners footprint_corners(const Pose& pose, const HalfExtents& half_extents);

/// All four footprint corners strictly inside the polygon.
bool footprint_inside(const Pose& pose, const HalfExtents& half_extents, const Polygon& poly);

/// Separating-axis test for two convex quadrilaterals. Touching boxes count
/// as overlapping.
bool boxes_overlap(const Corners& a, const Corners& b);

/// Agent box after moving at constant velocity for `t` seconds.
Corners agent_corners_at(const AgentState& agent, double t);

/// Arc-length coordinate of the point on the polyline closest to p.
double project_onto_polyline(const Vec2& p, const Polyline& line);
/// Unit tangent direction (radians) of the segment nearest to p.
double polyline_heading_near(const Vec2& p, const Polyline& line);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

}  // namespace goalflow::scenario
