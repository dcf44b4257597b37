#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "cwm/core/canonical.hpp"
#include "cwm/twin/twin.hpp"

namespace cwm {

/// Position on the chord between keypoints a and b at `frame`, rounded to
/// canonical precision. Both simplification and expansion use this.
inline Vec2 interpolate_keypoints(const MotionKeypoint& a, const MotionKeypoint& b, int frame) {
  if (frame == a.frame) return {a.x, a.y};
  if (frame == b.frame) return {b.x, b.y};
  const double s = static_cast<double>(frame - a.frame) / static_cast<double>(b.frame - a.frame);
  return {quantize(a.x + (b.x - a.x) * s), quantize(a.y + (b.y - a.y) * s)};
}

/// Synchronized Euclidean distance: how far a point lies from where the chord
/// places the object at the same frame.
inline double synchronized_distance(const MotionKeypoint& a, const MotionKeypoint& b, const MotionKeypoint& p) {
  const Vec2 q = interpolate_keypoints(a, b, p.frame);
  return std::hypot(p.x - q.x, p.y - q.y);
}

/// Ramer-Douglas-Peucker over a time-stamped polyline. Endpoints are always
/// kept; a single point yields itself.
inline std::vector<MotionKeypoint> simplify_rdp(const std::vector<MotionKeypoint>& points, double epsilon) {
  if (points.size() <= 2) return points;
  std::vector<bool> keep(points.size(), false);
  keep.front() = keep.back() = true;
  std::vector<std::pair<std::size_t, std::size_t>> work{{0, points.size() - 1}};
  while (!work.empty()) {
    auto [lo, hi] = work.back();
    work.pop_back();
    double worst = -1.0;
    std::size_t split = lo;
    for (std::size_t i = lo + 1; i < hi; ++i) {
      const double d = synchronized_distance(points[lo], points[hi], points[i]);
      if (d > worst) {
        worst = d;
        split = i;
      }
    }
    if (worst > epsilon) {
      keep[split] = true;
      work.push_back({split, hi});
      work.push_back({lo, split});
    }
  }
  std::vector<MotionKeypoint> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (keep[i]) out.push_back(points[i]);
  }
  return out;
}

}  // namespace cwm
