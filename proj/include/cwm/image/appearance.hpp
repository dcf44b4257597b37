#pragma once

#include <array>
#include <cctype>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cwm/core/error.hpp"
#include "cwm/core/types.hpp"

namespace cwm {

enum class Shape { kRectangle, kCircle };

inline std::string_view shape_name(Shape shape) {
  return shape == Shape::kCircle ? "circle" : "rectangle";
}

inline std::optional<Shape> parse_shape(std::string_view text) {
  if (text == "rectangle") return Shape::kRectangle;
  if (text == "circle") return Shape::kCircle;
  return std::nullopt;
}

inline Shape require_shape(std::string_view text) {
  if (auto shape = parse_shape(text)) return *shape;
  throw Error(Errc::kUnknownShape, "unknown shape '" + std::string(text) + "'");
}

struct NamedColor {
  std::string_view name;
  Rgb rgb;
};

/// Named colors. The first `kScenePaletteSize` are handed out by the scenario
/// generator; the rest stay free for replacement edits.
inline constexpr std::array<NamedColor, 14> kPalette{{
    {"red", {230, 25, 75}},
    {"green", {60, 180, 75}},
    {"yellow", {255, 225, 25}},
    {"blue", {0, 130, 200}},
    {"orange", {245, 130, 48}},
    {"purple", {145, 30, 180}},
    {"cyan", {70, 240, 240}},
    {"magenta", {240, 50, 230}},
    {"lime", {210, 245, 60}},
    {"pink", {250, 190, 212}},
    {"teal", {0, 128, 128}},
    {"brown", {170, 110, 40}},
    {"white", {255, 255, 255}},
    {"gray", {128, 128, 128}},
}};
inline constexpr std::size_t kScenePaletteSize = 12;

inline std::string color_name(Rgb c) {
  for (const auto& named : kPalette) {
    if (named.rgb == c) return std::string(named.name);
  }
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

/// Accepts a palette name, "#rrggbb" or "rgb(r,g,b)".
inline std::optional<Rgb> parse_color(std::string_view text) {
  for (const auto& named : kPalette) {
    if (named.name == text) return named.rgb;
  }
  auto hex = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (text.size() == 7 && text[0] == '#') {
    int v[6];
    for (int i = 0; i < 6; ++i) {
      v[i] = hex(text[static_cast<std::size_t>(i) + 1]);
      if (v[i] < 0) return std::nullopt;
    }
    return Rgb{static_cast<std::uint8_t>(v[0] * 16 + v[1]), static_cast<std::uint8_t>(v[2] * 16 + v[3]),
               static_cast<std::uint8_t>(v[4] * 16 + v[5])};
  }
  if (text.size() > 5 && text.substr(0, 4) == "rgb(" && text.back() == ')') {
    std::string inner(text.substr(4, text.size() - 5));
    for (char& c : inner) {
      if (c == ',') c = ' ';
    }
    std::istringstream in(inner);
    int r = -1, g = -1, b = -1;
    in >> r >> g >> b;
    if (in.fail() || !(in >> std::ws).eof()) return std::nullopt;
    if (r < 0 || r > 255 || g < 0 || g > 255 || b < 0 || b > 255) return std::nullopt;
    return Rgb{static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)};
  }
  return std::nullopt;
}

/// Parsed visual-property text: "<color> [<shape>] [<w>x<h>]".
struct Appearance {
  std::optional<Rgb> color;
  std::optional<Shape> shape;
  std::optional<std::pair<int, int>> size;
};

inline Appearance parse_appearance(std::string_view text) {
  Appearance out;
  std::istringstream in{std::string(text)};
  std::string token;
  while (in >> token) {
    if (auto c = parse_color(token); c && !out.color) {
      out.color = c;
    } else if (auto s = parse_shape(token); s && !out.shape) {
      out.shape = s;
    } else if (auto x = token.find('x'); x != std::string::npos && x > 0 && x + 1 < token.size()) {
      int w = 0, h = 0;
      char sep = 0;
      std::istringstream dims(token);
      if (dims >> w >> sep >> h && sep == 'x' && (dims >> std::ws).eof() && w > 0 && h > 0) {
        out.size = std::make_pair(w, h);
      }
    }
  }
  return out;
}

inline Rgb require_color(std::string_view attributes) {
  if (auto c = parse_appearance(attributes).color) return *c;
  throw Error(Errc::kUnknownColor, "no recognizable color in '" + std::string(attributes) + "'");
}

inline std::string attributes_text(Rgb color, Shape shape) {
  return color_name(color) + " " + std::string(shape_name(shape));
}

}  // namespace cwm
