#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cwm/core/error.hpp"
#include "cwm/core/key_value.hpp"
#include "cwm/core/rng.hpp"
#include "cwm/image/appearance.hpp"
#include "cwm/image/raster.hpp"
#include "cwm/sim/world.hpp"

namespace cwm {

/// Parameters of a random scene. Positions and velocity components are drawn
/// on a quarter-cell lattice.
struct ScenarioSpec {
  std::uint64_t seed = 0;
  int width = 64;
  int height = 64;
  int objects_min = 2;
  int objects_max = 5;
  int size_min = 4;
  int size_max = 8;
  double speed_min = 0.5;
  double speed_max = 2.0;

  friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

inline constexpr int kPlacementRetries = 100;

inline void require_valid(const ScenarioSpec& spec) {
  auto bad = [](const std::string& msg) { throw Error(Errc::kInvalidParam, "scenario: " + msg); };
  if (spec.width < 16 || spec.height < 16) bad("world must be at least 16x16");
  if (spec.objects_min < 0 || spec.objects_min > spec.objects_max) bad("object count range is empty");
  if (spec.objects_max > static_cast<int>(kScenePaletteSize)) bad("more objects than distinct scene colors");
  if (spec.size_min < 1 || spec.size_min > spec.size_max) bad("size range is empty");
  if (spec.size_max > std::min(spec.width, spec.height)) bad("objects larger than the world");
  if (!(spec.speed_min >= 0.0) || !(spec.speed_min <= spec.speed_max) || !std::isfinite(spec.speed_max)) {
    bad("speed range is empty");
  }
}

inline const std::vector<std::string>& scenario_keys() {
  static const std::vector<std::string> keys{"seed",     "width",    "height",    "objects_min", "objects_max",
                                             "size_min", "size_max", "speed_min", "speed_max"};
  return keys;
}

inline ScenarioSpec scenario_from_key_values(const KeyValues& kv) {
  ScenarioSpec spec;
  for (const auto& [key, value] : kv) {
    if (key == "seed") spec.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "width") spec.width = parse_number<int>(key, value);
    else if (key == "height") spec.height = parse_number<int>(key, value);
    else if (key == "objects_min") spec.objects_min = parse_number<int>(key, value);
    else if (key == "objects_max") spec.objects_max = parse_number<int>(key, value);
    else if (key == "size_min") spec.size_min = parse_number<int>(key, value);
    else if (key == "size_max") spec.size_max = parse_number<int>(key, value);
    else if (key == "speed_min") spec.speed_min = parse_number<double>(key, value);
    else if (key == "speed_max") spec.speed_max = parse_number<double>(key, value);
    else throw Error(Errc::kConfig, "unknown scenario key '" + key + "'");
  }
  require_valid(spec);
  return spec;
}

inline std::string scenario_to_text(const ScenarioSpec& spec) {
  return format_key_values({{"seed", std::to_string(spec.seed)},
                            {"width", std::to_string(spec.width)},
                            {"height", std::to_string(spec.height)},
                            {"objects_min", std::to_string(spec.objects_min)},
                            {"objects_max", std::to_string(spec.objects_max)},
                            {"size_min", std::to_string(spec.size_min)},
                            {"size_max", std::to_string(spec.size_max)},
                            {"speed_min", format_exact(spec.speed_min)},
                            {"speed_max", format_exact(spec.speed_max)}});
}

namespace detail {

inline bool boxes_overlap(const CellBox& a, const CellBox& b) {
  return a.x0 < b.x0 + b.w && b.x0 < a.x0 + a.w && a.y0 < b.y0 + b.h && b.y0 < a.y0 + a.h;
}

inline double lattice_coordinate(Rng& rng, int extent, int world) {
  // Admissible centroids span [extent / 2, world - extent / 2].
  const auto steps = static_cast<std::int64_t>(4 * (world - extent));
  return extent / 2.0 + 0.25 * static_cast<double>(rng.uniform_int(0, steps));
}

inline Vec2 lattice_velocity(Rng& rng, double speed_min, double speed_max) {
  const auto q = static_cast<std::int64_t>(std::floor(speed_max * 4.0));
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double vx = 0.25 * static_cast<double>(rng.uniform_int(-q, q));
    const double vy = 0.25 * static_cast<double>(rng.uniform_int(-q, q));
    const double speed = std::hypot(vx, vy);
    if (speed >= speed_min && speed <= speed_max) return {vx, vy};
  }
  return {std::ceil(speed_min * 4.0) / 4.0, 0.0};
}

}  // namespace detail

/// Deterministic in the seed; initial footprints never overlap.
inline WorldState generate_scenario(const ScenarioSpec& spec) {
  require_valid(spec);
  Rng rng(spec.seed);
  WorldState world;
  world.width = spec.width;
  world.height = spec.height;
  const int n = static_cast<int>(rng.uniform_int(spec.objects_min, spec.objects_max));

  std::vector<int> layers(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) layers[static_cast<std::size_t>(i)] = i;
  std::vector<std::size_t> colors(kScenePaletteSize);
  for (std::size_t i = 0; i < colors.size(); ++i) colors[i] = i;
  auto shuffle = [&rng](auto& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  };
  shuffle(layers);
  shuffle(colors);

  std::vector<CellBox> placed;
  for (int i = 0; i < n; ++i) {
    SimObject o;
    o.id = i + 1;
    o.shape = rng.uniform_int(0, 1) == 0 ? Shape::kRectangle : Shape::kCircle;
    o.color = kPalette[colors[static_cast<std::size_t>(i)]].rgb;
    o.w = static_cast<int>(rng.uniform_int(spec.size_min, spec.size_max));
    if (o.shape == Shape::kCircle) {
      o.w = std::max(o.w, std::min(4, spec.size_max));
      o.h = o.w;
    } else {
      o.h = static_cast<int>(rng.uniform_int(spec.size_min, spec.size_max));
    }
    o.depth_layer = layers[static_cast<std::size_t>(i)];
    bool ok = false;
    for (int attempt = 0; attempt < kPlacementRetries && !ok; ++attempt) {
      o.position = {detail::lattice_coordinate(rng, o.w, spec.width), detail::lattice_coordinate(rng, o.h, spec.height)};
      const CellBox box = footprint_box(o.position.x, o.position.y, o.w, o.h);
      ok = std::none_of(placed.begin(), placed.end(), [&](const CellBox& b) { return detail::boxes_overlap(box, b); });
    }
    if (!ok) {
      throw Error(Errc::kPlacement, "could not place object " + std::to_string(o.id) + " after " +
                                        std::to_string(kPlacementRetries) + " attempts");
    }
    placed.push_back(footprint_box(o.position.x, o.position.y, o.w, o.h));
    o.velocity = detail::lattice_velocity(rng, spec.speed_min, spec.speed_max);
    world.objects.push_back(o);
  }
  return world;
}

}  // namespace cwm
