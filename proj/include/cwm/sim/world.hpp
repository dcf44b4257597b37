#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cwm/core/types.hpp"
#include "cwm/image/appearance.hpp"

namespace cwm {

struct SimObject {
  int id = 0;
  Shape shape = Shape::kRectangle;
  Rgb color;
  int w = 4;
  int h = 4;
  Vec2 position;
  Vec2 velocity;
  /// 0 is nearest.
  int depth_layer = 0;
  /// Remaining frozen steps: 0 none, -1 until the end.
  int freeze_steps = 0;
  /// Velocity restored when a timed freeze ends.
  Vec2 held_velocity;

  friend bool operator==(const SimObject&, const SimObject&) = default;
};

struct WorldState {
  int width = 64;
  int height = 64;
  std::vector<SimObject> objects;
  int frame_index = 0;

  GridSize grid() const { return {width, height}; }

  const SimObject* find(int id) const {
    for (const auto& o : objects) {
      if (o.id == id) return &o;
    }
    return nullptr;
  }

  SimObject* find(int id) {
    for (auto& o : objects) {
      if (o.id == id) return &o;
    }
    return nullptr;
  }

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

struct AxisMotion {
  double position = 0.0;
  double velocity = 0.0;
};

/// One frame of motion along one axis for an object of the given extent in a
/// world of the given size. Crossing an admissible limit reflects the
/// position about it (pos' = 2 * limit - pos) and negates the velocity.
inline AxisMotion advance_axis(double position, double velocity, double extent, double world) {
  const double lo = extent / 2.0;
  const double hi = world - extent / 2.0;
  double p = position + velocity;
  double v = velocity;
  if (hi <= lo) return {std::clamp(p, hi, lo), v};
  for (int bounce = 0; bounce < 64; ++bounce) {
    if (p > hi) {
      p = 2.0 * hi - p;
      v = -v;
    } else if (p < lo) {
      p = 2.0 * lo - p;
      v = -v;
    } else {
      break;
    }
  }
  return {p, v};
}

/// Moves a position into the admissible rectangle for an object of size (w, h).
inline Vec2 fit_position(Vec2 p, int w, int h, int width, int height) {
  return {std::clamp(p.x, w / 2.0, std::max(w / 2.0, width - w / 2.0)),
          std::clamp(p.y, h / 2.0, std::max(h / 2.0, height - h / 2.0))};
}

inline SimObject step_object(const SimObject& o, int width, int height) {
  SimObject next = o;
  if (o.freeze_steps != 0) {
    if (o.freeze_steps > 0 && --next.freeze_steps == 0) {
      next.velocity = o.held_velocity;
      next.held_velocity = {};
    }
    return next;
  }
  const AxisMotion mx = advance_axis(o.position.x, o.velocity.x, o.w, width);
  const AxisMotion my = advance_axis(o.position.y, o.velocity.y, o.h, height);
  next.position = {mx.position, my.position};
  next.velocity = {mx.velocity, my.velocity};
  return next;
}

/// Constant velocity with elastic wall reflection; objects pass through each other.
inline WorldState step(const WorldState& state) {
  WorldState next = state;
  for (auto& o : next.objects) o = step_object(o, state.width, state.height);
  ++next.frame_index;
  return next;
}

/// k + 1 states starting with `state`.
inline std::vector<WorldState> simulate(const WorldState& state, int k) {
  std::vector<WorldState> out;
  out.reserve(static_cast<std::size_t>(std::max(k, 0)) + 1);
  out.push_back(state);
  for (int i = 0; i < k; ++i) out.push_back(step(out.back()));
  return out;
}

}  // namespace cwm
