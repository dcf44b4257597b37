#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "cwm/core/canonical.hpp"
#include "cwm/core/error.hpp"
#include "cwm/image/frame.hpp"
#include "cwm/image/raster.hpp"
#include "cwm/image/style.hpp"
#include "cwm/sim/world.hpp"
#include "cwm/twin/templates.hpp"
#include "cwm/twin/twin.hpp"

namespace cwm {

/// The simulator's own renderer: paints footprints straight from object
/// state, farthest layer first and lower ids last within a layer.
inline Frame render_world(const WorldState& state, const RenderStyle& style = {}) {
  require_style(style);
  Frame frame = blank_frame(state.grid(), style);
  std::vector<const SimObject*> order;
  for (const auto& o : state.objects) order.push_back(&o);
  std::sort(order.begin(), order.end(), [](const SimObject* a, const SimObject* b) {
    if (a->depth_layer != b->depth_layer) return a->depth_layer > b->depth_layer;
    return a->id > b->id;
  });
  for (const SimObject* o : order) {
    for_each_footprint_cell(o->shape, o->position.x, o->position.y, o->w, o->h, state.grid(),
                            [&](int cx, int cy) { paint_cell(frame, cx, cy, o->color, style.scale); });
  }
  return frame;
}

inline Video render_states(const std::vector<WorldState>& states, const RenderStyle& style = {}) {
  Video video;
  if (!states.empty()) video.first_frame = states.front().frame_index;
  for (const auto& s : states) video.frames.push_back(render_world(s, style));
  return video;
}

/// Ground-truth twin of a simulated sequence: exact positions (at canonical
/// precision), full unoccluded masks, z = depth layer.
inline TwinSequence twin_from_world(const std::vector<WorldState>& states) {
  TwinSequence twin;
  if (states.empty()) {
    finalize_twin(twin);
    return twin;
  }
  twin.grid = states.front().grid();
  twin.frame_range = {states.front().frame_index, states.back().frame_index};
  std::map<int, ObjectTrace> traces;
  for (const WorldState& s : states) {
    for (const SimObject& o : s.objects) {
      ObjectTrace& t = traces[o.id];
      t.id = o.id;
      t.category = std::string(shape_name(o.shape));
      t.attributes = attributes_text(o.color, o.shape);
      ElementRecord rec;
      rec.frame = s.frame_index;
      rec.spatial = quantized({o.position.x, o.position.y, static_cast<double>(o.depth_layer),
                               static_cast<double>(o.w), static_cast<double>(o.h)});
      rec.mask = rasterize(o.shape, rec.spatial.x, rec.spatial.y, o.w, o.h, twin.grid);
      t.records.push_back(std::move(rec));
    }
  }
  for (auto& [id, t] : traces) twin.elements.push_back(std::move(t));
  finalize_twin(twin);
  return twin;
}

/// Debug dump of a simulator state. Not canonical; numbers are shortest round-trip.
inline std::string dump_world(const WorldState& state) {
  nlohmann::ordered_json doc;
  doc["world_version"] = "1";
  doc["width"] = state.width;
  doc["height"] = state.height;
  doc["frame_index"] = state.frame_index;
  doc["objects"] = nlohmann::ordered_json::array();
  for (const SimObject& o : state.objects) {
    nlohmann::ordered_json j;
    j["id"] = o.id;
    j["shape"] = std::string(shape_name(o.shape));
    j["color"] = {o.color.r, o.color.g, o.color.b};
    j["size"] = {o.w, o.h};
    j["position"] = {o.position.x, o.position.y};
    j["velocity"] = {o.velocity.x, o.velocity.y};
    j["depth_layer"] = o.depth_layer;
    j["freeze_steps"] = o.freeze_steps;
    j["held_velocity"] = {o.held_velocity.x, o.held_velocity.y};
    doc["objects"].push_back(std::move(j));
  }
  return doc.dump();
}

inline WorldState parse_world(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::kSyntax, std::string("malformed world document: ") + e.what());
  }
  try {
    if (doc.at("world_version").get<std::string>() != "1") throw SchemaError("/world_version", "unsupported version");
    WorldState state;
    state.width = doc.at("width").get<int>();
    state.height = doc.at("height").get<int>();
    state.frame_index = doc.at("frame_index").get<int>();
    for (const auto& j : doc.at("objects")) {
      SimObject o;
      o.id = j.at("id").get<int>();
      o.shape = require_shape(j.at("shape").get<std::string>());
      o.color = {j.at("color").at(0).get<std::uint8_t>(), j.at("color").at(1).get<std::uint8_t>(),
                 j.at("color").at(2).get<std::uint8_t>()};
      o.w = j.at("size").at(0).get<int>();
      o.h = j.at("size").at(1).get<int>();
      o.position = {j.at("position").at(0).get<double>(), j.at("position").at(1).get<double>()};
      o.velocity = {j.at("velocity").at(0).get<double>(), j.at("velocity").at(1).get<double>()};
      o.depth_layer = j.at("depth_layer").get<int>();
      if (j.contains("freeze_steps")) o.freeze_steps = j.at("freeze_steps").get<int>();
      if (j.contains("held_velocity")) {
        o.held_velocity = {j.at("held_velocity").at(0).get<double>(), j.at("held_velocity").at(1).get<double>()};
      }
      state.objects.push_back(o);
    }
    return state;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("/", std::string("bad world document: ") + e.what());
  }
}

}  // namespace cwm
