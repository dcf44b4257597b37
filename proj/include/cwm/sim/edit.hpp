#pragma once

#include <algorithm>
#include <string>

#include "cwm/core/error.hpp"
#include "cwm/intervene/intervention.hpp"
#include "cwm/sim/world.hpp"

namespace cwm {

namespace detail {

inline void apply_appearance(WorldState& world, SimObject& o, std::optional<Shape> shape, std::optional<Rgb> color,
                             std::optional<std::pair<int, int>> size) {
  if (color) {
    for (const SimObject& other : world.objects) {
      if (other.id != o.id && other.color == *color) {
        throw Error(Errc::kInvalidParam, "color " + color_name(*color) + " already used by object " +
                                             std::to_string(other.id));
      }
    }
    o.color = *color;
  }
  if (size) {
    if (size->first > world.width || size->second > world.height) {
      throw Error(Errc::kInvalidParam, "size exceeds the world");
    }
    o.w = size->first;
    o.h = size->second;
  }
  if (shape) o.shape = *shape;
  o.position = fit_position(o.position, o.w, o.h, world.width, world.height);
}

}  // namespace detail

/// Oracle-side application of an intervention to a simulator state.
inline WorldState apply_world_edit(const WorldState& state, const Intervention& intervention) {
  WorldState out = state;
  if (intervention.kind == InterventionKind::kNull) return out;
  if (intervention.kind == InterventionKind::kNatural) {
    throw Error(Errc::kUnsupportedIntervention, "the simulator only applies DSL interventions");
  }
  SimObject* o = out.find(intervention.target_id);
  if (!o) throw Error(Errc::kUnknownId, "no object with id " + std::to_string(intervention.target_id));
  switch (intervention.kind) {
    case InterventionKind::kRemove:
      out.objects.erase(std::remove_if(out.objects.begin(), out.objects.end(),
                                       [&](const SimObject& s) { return s.id == intervention.target_id; }),
                        out.objects.end());
      break;
    case InterventionKind::kReplace:
      detail::apply_appearance(out, *o, intervention.shape, intervention.color, intervention.size);
      if (intervention.velocity) {
        o->velocity = *intervention.velocity;
        o->freeze_steps = 0;
      }
      break;
    case InterventionKind::kSetAttribute: {
      const Appearance a = parse_appearance(intervention.attribute_text);
      if (!a.color && !a.shape && !a.size) {
        throw Error(Errc::kInvalidParam, "attributes '" + intervention.attribute_text + "' name no color, shape or size");
      }
      detail::apply_appearance(out, *o, a.shape, a.color, a.size);
      break;
    }
    case InterventionKind::kSetMotion:
      o->velocity = *intervention.velocity;
      o->freeze_steps = 0;
      break;
    case InterventionKind::kFreeze:
      if (intervention.freeze_frames && *intervention.freeze_frames == 0) break;
      if (o->freeze_steps == 0) o->held_velocity = o->velocity;
      o->velocity = {};
      o->freeze_steps = intervention.freeze_frames ? *intervention.freeze_frames : -1;
      break;
    default:
      break;
  }
  return out;
}

}  // namespace cwm
