#pragma once

#include <Eigen/Dense>
#include <vector>

namespace vemsf {

using Vec2 = Eigen::Vector2d;

// z-component of the cross product (p1-p0) x (p2-p0)
inline double cross2(const Vec2& p0, const Vec2& p1, const Vec2& p2) {
  return (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p1.y() - p0.y()) * (p2.x() - p0.x());
}

inline double triangle_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * cross2(a, b, c);
}

// Signed area of a closed polygon loop (positive = counterclockwise)
double polygon_signed_area(const std::vector<Vec2>& pts);

Vec2 polygon_centroid(const std::vector<Vec2>& pts);

// Max pairwise vertex distance
double polygon_diameter(const std::vector<Vec2>& pts);

// Strict even-odd test; points on the boundary give an unspecified result
bool point_in_polygon(const std::vector<Vec2>& pts, const Vec2& q);

// Distance from q to the polygon boundary (>= 0 everywhere)
double distance_to_boundary(const std::vector<Vec2>& pts, const Vec2& q);

// True if the closed loop has a proper self-intersection between
// non-adjacent segments
bool polygon_self_intersects(const std::vector<Vec2>& pts);

// Center of the largest inscribed ball, located by a bbox grid scan plus
// shrinking local refinement; resolved to about 1e-6 * diameter
Vec2 inscribed_ball_center(const std::vector<Vec2>& pts, double* radius = nullptr);

}  // namespace vemsf
