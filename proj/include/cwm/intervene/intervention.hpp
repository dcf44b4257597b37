#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "cwm/core/canonical.hpp"
#include "cwm/core/types.hpp"
#include "cwm/image/appearance.hpp"

namespace cwm {

enum class InterventionKind { kNull, kRemove, kReplace, kSetMotion, kSetAttribute, kFreeze, kNatural };

inline std::string_view kind_name(InterventionKind kind) {
  switch (kind) {
    case InterventionKind::kNull: return "NULL";
    case InterventionKind::kRemove: return "REMOVE";
    case InterventionKind::kReplace: return "REPLACE";
    case InterventionKind::kSetMotion: return "SET_MOTION";
    case InterventionKind::kSetAttribute: return "SET_ATTRIBUTE";
    case InterventionKind::kFreeze: return "FREEZE";
    case InterventionKind::kNatural: return "NATURAL";
  }
  return "?";
}

/// A counterfactual edit applied at frame `at_frame`. Which optional fields
/// are meaningful depends on `kind`; natural-language queries keep their text
/// in `query` and are only understood by the LLM backend.
struct Intervention {
  InterventionKind kind = InterventionKind::kNull;
  int target_id = -1;
  int at_frame = 0;
  std::optional<Shape> shape;
  std::optional<Rgb> color;
  std::optional<std::pair<int, int>> size;
  std::optional<Vec2> velocity;
  std::string attribute_text;
  /// FREEZE duration in frames; nullopt holds until the end of the horizon.
  std::optional<int> freeze_frames;
  std::string query;

  bool targets_object() const { return kind != InterventionKind::kNull && kind != InterventionKind::kNatural; }

  /// True when the edit changes how the target moves.
  bool alters_motion() const {
    return kind == InterventionKind::kSetMotion || kind == InterventionKind::kFreeze ||
           (kind == InterventionKind::kReplace && velocity.has_value());
  }

  friend bool operator==(const Intervention&, const Intervention&) = default;
};

namespace detail {

inline std::string dsl_number(double v) {
  std::string s = format_fixed4(v);
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

inline std::string dsl_color(Rgb c) {
  const std::string name = color_name(c);
  if (name[0] != '#') return name;
  return "(" + std::to_string(c.r) + "," + std::to_string(c.g) + "," + std::to_string(c.b) + ")";
}

inline std::string dsl_quote(std::string_view text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

/// Canonical DSL text; parse_intervention(to_dsl(i)) == i for every DSL kind.
inline std::string to_dsl(const Intervention& i) {
  using namespace detail;
  const std::string id = "id=" + std::to_string(i.target_id);
  std::string out;
  switch (i.kind) {
    case InterventionKind::kNull: out = "NULL"; break;
    case InterventionKind::kNatural: return i.query;
    case InterventionKind::kRemove: out = "REMOVE " + id; break;
    case InterventionKind::kFreeze: out = "FREEZE " + id; break;
    case InterventionKind::kSetMotion:
      out = "SET " + id + " velocity=(" + dsl_number(i.velocity->x) + "," + dsl_number(i.velocity->y) + ")";
      break;
    case InterventionKind::kSetAttribute: out = "SET " + id + " attributes=" + dsl_quote(i.attribute_text); break;
    case InterventionKind::kReplace:
      out = "REPLACE " + id + " WITH";
      if (i.shape) out += " shape=" + std::string(shape_name(*i.shape));
      if (i.color) out += " color=" + dsl_color(*i.color);
      if (i.size) out += " size=(" + std::to_string(i.size->first) + "," + std::to_string(i.size->second) + ")";
      if (i.velocity) out += " velocity=(" + dsl_number(i.velocity->x) + "," + dsl_number(i.velocity->y) + ")";
      break;
  }
  out += " AT t=" + std::to_string(i.at_frame);
  if (i.kind == InterventionKind::kFreeze && i.freeze_frames) out += " FOR " + std::to_string(*i.freeze_frames);
  return out;
}

}  // namespace cwm
