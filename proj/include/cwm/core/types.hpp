#pragma once

#include <compare>
#include <cstdint>

namespace cwm {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// World / frame extent in cells. One cell renders as one pixel at scale 1.
struct GridSize {
  int width = 0;
  int height = 0;

  std::int64_t cells() const { return static_cast<std::int64_t>(width) * height; }
  friend bool operator==(const GridSize&, const GridSize&) = default;
};

/// Inclusive frame interval.
struct FrameRange {
  int first = 0;
  int last = 0;

  int span() const { return last - first + 1; }
  bool contains(int frame) const { return frame >= first && frame <= last; }
  friend bool operator==(const FrameRange&, const FrameRange&) = default;
};

/// Axis-aligned box in cell indices; (x0, y0) is the top-left cell.
struct CellBox {
  int x0 = 0;
  int y0 = 0;
  int w = 0;
  int h = 0;

  friend bool operator==(const CellBox&, const CellBox&) = default;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend auto operator<=>(const Rgb&, const Rgb&) = default;
};

}  // namespace cwm
