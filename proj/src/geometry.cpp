#include "vemsf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vemsf {

double polygon_signed_area(const std::vector<Vec2>& pts) {
  double s = 0.0;
  const int n = static_cast<int>(pts.size());
  for (int i = 0; i < n; ++i) {
    const Vec2& a = pts[i];
    const Vec2& b = pts[(i + 1) % n];
    s += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * s;
}

Vec2 polygon_centroid(const std::vector<Vec2>& pts) {
  const int n = static_cast<int>(pts.size());
  double a6 = 0.0;
  Vec2 c = Vec2::Zero();
  for (int i = 0; i < n; ++i) {
    const Vec2& p = pts[i];
    const Vec2& q = pts[(i + 1) % n];
    const double w = p.x() * q.y() - q.x() * p.y();
    a6 += w;
    c += w * (p + q);
  }
  return c / (3.0 * a6);
}

double polygon_diameter(const std::vector<Vec2>& pts) {
  double d2 = 0.0;
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j)
      d2 = std::max(d2, (pts[i] - pts[j]).squaredNorm());
  return std::sqrt(d2);
}

bool point_in_polygon(const std::vector<Vec2>& pts, const Vec2& q) {
  bool inside = false;
  const int n = static_cast<int>(pts.size());
  for (int i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = pts[i];
    const Vec2& b = pts[j];
    if ((a.y() > q.y()) != (b.y() > q.y())) {
      const double xint = a.x() + (q.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
      if (q.x() < xint) inside = !inside;
    }
  }
  return inside;
}

static double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

double distance_to_boundary(const std::vector<Vec2>& pts, const Vec2& q) {
  double d = std::numeric_limits<double>::max();
  const int n = static_cast<int>(pts.size());
  for (int i = 0; i < n; ++i)
    d = std::min(d, point_segment_distance(q, pts[i], pts[(i + 1) % n]));
  return d;
}

static bool segments_properly_intersect(const Vec2& a, const Vec2& b, const Vec2& c,
                                        const Vec2& d) {
  const double d1 = cross2(c, d, a);
  const double d2 = cross2(c, d, b);
  const double d3 = cross2(a, b, c);
  const double d4 = cross2(a, b, d);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
         ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

bool polygon_self_intersects(const std::vector<Vec2>& pts) {
  const int n = static_cast<int>(pts.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      // skip adjacent segments (share a vertex)
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (segments_properly_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]))
        return true;
    }
  }
  return false;
}

Vec2 inscribed_ball_center(const std::vector<Vec2>& pts, double* radius) {
  Vec2 lo = pts[0], hi = pts[0];
  for (const Vec2& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec2 span = hi - lo;

  Vec2 best = polygon_centroid(pts);
  double best_d = point_in_polygon(pts, best) ? distance_to_boundary(pts, best) : -1.0;

  const int ng = 32;
  for (int i = 0; i <= ng; ++i) {
    for (int j = 0; j <= ng; ++j) {
      Vec2 q = lo + Vec2(span.x() * i / ng, span.y() * j / ng);
      if (!point_in_polygon(pts, q)) continue;
      const double d = distance_to_boundary(pts, q);
      if (d > best_d) {
        best_d = d;
        best = q;
      }
    }
  }

  // local refinement: 5x5 stencil with shrinking window
  Vec2 win = span / ng;
  for (int round = 0; round < 26; ++round) {
    Vec2 cur_best = best;
    double cur_d = best_d;
    for (int i = -2; i <= 2; ++i) {
      for (int j = -2; j <= 2; ++j) {
        if (i == 0 && j == 0) continue;
        Vec2 q = best + Vec2(win.x() * i / 2.0, win.y() * j / 2.0);
        if (!point_in_polygon(pts, q)) continue;
        const double d = distance_to_boundary(pts, q);
        if (d > cur_d) {
          cur_d = d;
          cur_best = q;
        }
      }
    }
    best = cur_best;
    best_d = cur_d;
    win *= 0.6;
  }

  if (radius) *radius = best_d;
  return best;
}

}  // namespace vemsf
