#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cwm/core/canonical.hpp"
#include "cwm/core/error.hpp"
#include "cwm/image/appearance.hpp"
#include "cwm/image/raster.hpp"
#include "cwm/intervene/intervention.hpp"
#include "cwm/sim/world.hpp"
#include "cwm/twin/codec.hpp"
#include "cwm/twin/templates.hpp"
#include "cwm/twin/twin.hpp"
#include "cwm/twin/validate.hpp"

namespace cwm {

using MotionMap = std::map<int, Vec2>;

/// Edited twin s~ over [t, t + k], plus the exact continuous centroids
/// behind its records (the twin itself holds canonical precision).
struct CounterfactualTwin {
  TwinSequence twin;
  std::string provenance;
  Intervention intervention;
  int sample = 0;
  std::map<int, std::vector<Vec2>> trajectories;

  friend bool operator==(const CounterfactualTwin&, const CounterfactualTwin&) = default;
};

/// Velocity of one element at `at_frame`: mean step over the last
/// min(3, available) frame gaps ending at at_frame (or at the element's last
/// frame if it departed earlier). With no history before that frame the gaps
/// that follow it are used instead; a single record gives zero.
inline Vec2 estimate_velocity(const ObjectTrace& e, int at_frame) {
  if (e.records.empty()) return {};
  const FrameRange p = e.presence();
  const int anchor = std::clamp(at_frame, p.first, p.last);
  int from = anchor;
  int to = anchor;
  if (anchor > p.first) {
    from = anchor - std::min(3, anchor - p.first);
  } else {
    to = anchor + std::min(3, p.last - anchor);
  }
  if (from == to) return {};
  const SpatialProps& a = e.at(from)->spatial;
  const SpatialProps& b = e.at(to)->spatial;
  return {(b.x - a.x) / (to - from), (b.y - a.y) / (to - from)};
}

inline MotionMap estimate_motion(const TwinSequence& source, int at_frame) {
  if (!source.frame_range.contains(at_frame)) {
    throw Error(Errc::kRange, "frame " + std::to_string(at_frame) + " outside the twin's frame range");
  }
  MotionMap out;
  for (const ObjectTrace& e : source.elements) out[e.id] = estimate_velocity(e, at_frame);
  return out;
}

/// Knobs used by sampling; the defaults give the plain deterministic propagation.
struct PropagateOptions {
  /// Velocities to use instead of estimates (per id).
  MotionMap motion;
  /// Heading rotation (radians) and speed scale applied to the target's
  /// post-intervention velocity.
  double rotate = 0.0;
  double scale = 1.0;
};

namespace detail {

inline const ElementRecord& max_area_record(const ObjectTrace& e) {
  const ElementRecord* best = &e.records.front();
  for (const ElementRecord& r : e.records) {
    if (r.mask.area() > best->mask.area()) best = &r;
  }
  return *best;
}

inline Vec2 perturb(Vec2 v, double rotate, double scale) {
  if (rotate == 0.0 && scale == 1.0) return v;
  const double c = std::cos(rotate);
  const double s = std::sin(rotate);
  return {scale * (c * v.x - s * v.y), scale * (s * v.x + c * v.y)};
}

inline Vec2 motion_for(const ObjectTrace& e, int frame, const PropagateOptions& options) {
  if (auto it = options.motion.find(e.id); it != options.motion.end()) return it->second;
  return estimate_velocity(e, frame);
}

/// Rolls a simulator object forward from frame t and writes records for t..t+k.
inline void roll_out(SimObject o, int t, int k, double z, GridSize grid, ObjectTrace& trace,
                     std::vector<Vec2>& trajectory) {
  for (int tau = t; tau <= t + k; ++tau) {
    if (tau > t) o = step_object(o, grid.width, grid.height);
    ElementRecord rec;
    rec.frame = tau;
    rec.spatial = quantized({o.position.x, o.position.y, z, static_cast<double>(o.w), static_cast<double>(o.h)});
    rec.mask = rasterize(o.shape, rec.spatial.x, rec.spatial.y, o.w, o.h, grid);
    trace.records.push_back(std::move(rec));
    trajectory.push_back(o.position);
  }
}

inline SimObject object_from_record(const ObjectTrace& e, const ElementRecord& at, Vec2 velocity) {
  const ElementRecord& amodal = max_area_record(e);
  SimObject o;
  o.id = e.id;
  o.shape = require_shape(e.category);
  o.color = require_color(e.attributes);
  o.w = std::max(1, static_cast<int>(std::lround(amodal.spatial.w)));
  o.h = std::max(1, static_cast<int>(std::lround(amodal.spatial.h)));
  o.position = {at.spatial.x, at.spatial.y};
  o.velocity = velocity;
  return o;
}

inline void restyle(SimObject& o, const TwinSequence& source, int t, std::optional<Shape> shape,
                    std::optional<Rgb> color, std::optional<std::pair<int, int>> size) {
  if (color) {
    for (const ObjectRecord& r : source.records_at(t)) {
      if (r.id != o.id && parse_appearance(r.attributes).color == color) {
        throw Error(Errc::kInvalidParam, "color " + color_name(*color) + " already used by object " + std::to_string(r.id));
      }
    }
    o.color = *color;
  }
  if (size) {
    if (size->first > source.grid.width || size->second > source.grid.height) {
      throw Error(Errc::kInvalidParam, "size exceeds the world");
    }
    o.w = size->first;
    o.h = size->second;
  }
  if (shape) o.shape = *shape;
  o.position = fit_position(o.position, o.w, o.h, source.grid.width, source.grid.height);
}

}  // namespace detail

/// Deterministic counterfactual propagation over [t, t + k]. Objects the edit
/// does not touch replay their factual records where the source observed
/// them and continue under constant velocity with wall reflection past its
/// last frame; the target is rolled out from its edited frame-t state with
/// the simulator's step rule.
inline CounterfactualTwin propagate(const TwinSequence& source, const Intervention& intervention, int k,
                                    const PropagateOptions& options = {}) {
  if (k < 0) throw Error(Errc::kHorizon, "horizon must be non-negative");
  if (intervention.kind == InterventionKind::kNatural) {
    throw Error(Errc::kUnsupportedIntervention, "natural-language interventions need the LLM backend");
  }
  const int t = intervention.at_frame;
  if (!source.frame_range.contains(t)) {
    throw Error(Errc::kRange, "intervention time " + std::to_string(t) + " outside frame range [" +
                                  std::to_string(source.frame_range.first) + ", " +
                                  std::to_string(source.frame_range.last) + "]");
  }
  const ObjectTrace* target = nullptr;
  if (intervention.targets_object()) {
    target = source.find(intervention.target_id);
    if (!target || !target->at(t)) {
      throw Error(Errc::kUnknownId, "no object with id " + std::to_string(intervention.target_id) + " at frame " +
                                        std::to_string(t));
    }
  }

  CounterfactualTwin out;
  out.intervention = intervention;
  out.provenance = "deterministic";
  TwinSequence& twin = out.twin;
  twin.grid = source.grid;
  twin.frame_range = {t, t + k};
  const int observed_last = source.frame_range.last;

  for (const ObjectTrace& e : source.elements) {
    if (&e == target) continue;
    ObjectTrace trace;
    trace.id = e.id;
    trace.category = e.category;
    trace.attributes = e.attributes;
    std::vector<Vec2> trajectory;
    for (int tau = t; tau <= std::min(t + k, observed_last); ++tau) {
      if (const ElementRecord* rec = e.at(tau)) {
        trace.records.push_back(*rec);
        trajectory.push_back({rec->spatial.x, rec->spatial.y});
      }
    }
    const FrameRange p = e.presence();
    if (t + k > observed_last && p.last == observed_last) {
      const ElementRecord& last = *e.at(p.last);
      SimObject o = detail::object_from_record(e, last, detail::motion_for(e, p.last, options));
      const double z = last.spatial.z;
      ObjectTrace tail;
      std::vector<Vec2> tail_path;
      detail::roll_out(o, p.last, t + k - p.last, z, twin.grid, tail, tail_path);
      for (std::size_t i = 0; i < tail.records.size(); ++i) {
        if (tail.records[i].frame <= observed_last || tail.records[i].frame < t) continue;
        trace.records.push_back(std::move(tail.records[i]));
        trajectory.push_back(tail_path[i]);
      }
    }
    if (trace.records.empty()) continue;
    out.trajectories[e.id] = std::move(trajectory);
    twin.elements.push_back(std::move(trace));
  }

  if (target && intervention.kind != InterventionKind::kRemove) {
    const ElementRecord& at = *target->at(t);
    SimObject o = detail::object_from_record(*target, at, detail::motion_for(*target, t, options));
    switch (intervention.kind) {
      case InterventionKind::kReplace:
        detail::restyle(o, source, t, intervention.shape, intervention.color, intervention.size);
        if (intervention.velocity) o.velocity = *intervention.velocity;
        o.velocity = detail::perturb(o.velocity, options.rotate, options.scale);
        break;
      case InterventionKind::kSetAttribute: {
        const Appearance a = parse_appearance(intervention.attribute_text);
        if (!a.color && !a.shape && !a.size) {
          throw Error(Errc::kInvalidParam, "attributes '" + intervention.attribute_text + "' name no color, shape or size");
        }
        detail::restyle(o, source, t, a.shape, a.color, a.size);
        o.velocity = detail::perturb(o.velocity, options.rotate, options.scale);
        break;
      }
      case InterventionKind::kSetMotion:
        o.velocity = *intervention.velocity;
        break;
      case InterventionKind::kFreeze: {
        const Vec2 resumed = detail::perturb(o.velocity, options.rotate, options.scale);
        if (intervention.freeze_frames && *intervention.freeze_frames == 0) {
          o.velocity = resumed;
        } else {
          o.held_velocity = resumed;
          o.velocity = {};
          o.freeze_steps = intervention.freeze_frames ? *intervention.freeze_frames : -1;
        }
        break;
      }
      default:
        break;
    }
    ObjectTrace trace;
    trace.id = target->id;
    trace.category = std::string(shape_name(o.shape));
    trace.attributes = attributes_text(o.color, o.shape);
    std::vector<Vec2> trajectory;
    detail::roll_out(o, t, k, at.spatial.z, twin.grid, trace, trajectory);
    out.trajectories[target->id] = std::move(trajectory);
    twin.elements.push_back(std::move(trace));
  }

  finalize_twin(twin);
  const auto violations = validate(twin);
  if (!violations.empty()) throw Error(Errc::kInvariant, "propagated twin is invalid: " + describe(violations));
  return out;
}

}  // namespace cwm
