#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "cwm/core/types.hpp"
#include "cwm/image/appearance.hpp"
#include "cwm/twin/rle.hpp"

namespace cwm {

/// Footprint of a w x h object centred at continuous (x, y). The box starts at
/// ceil(x - w/2), which keeps the cell-index centroid within 0.5 of x and
/// keeps every position in [w/2, W - w/2] fully inside the grid.
inline CellBox footprint_box(double x, double y, int w, int h) {
  return {static_cast<int>(std::ceil(x - w / 2.0)), static_cast<int>(std::ceil(y - h / 2.0)), w, h};
}

/// Whether local cell (i, j) of a w x h box belongs to `shape`. Circles are
/// the ellipse inscribed in the box, tested at cell centres in integer form.
inline bool shape_covers(Shape shape, int i, int j, int w, int h) {
  if (shape == Shape::kRectangle) return true;
  const std::int64_t dx = 2 * i - (w - 1);
  const std::int64_t dy = 2 * j - (h - 1);
  const std::int64_t ww = static_cast<std::int64_t>(w) * w;
  const std::int64_t hh = static_cast<std::int64_t>(h) * h;
  return dx * dx * hh + dy * dy * ww <= ww * hh;
}

template <class F>
void for_each_footprint_cell(Shape shape, double x, double y, int w, int h, GridSize grid, F&& visit) {
  const CellBox box = footprint_box(x, y, w, h);
  for (int j = 0; j < h; ++j) {
    const int cy = box.y0 + j;
    if (cy < 0 || cy >= grid.height) continue;
    for (int i = 0; i < w; ++i) {
      const int cx = box.x0 + i;
      if (cx < 0 || cx >= grid.width) continue;
      if (shape_covers(shape, i, j, w, h)) visit(cx, cy);
    }
  }
}

inline RleMask rasterize(Shape shape, double x, double y, int w, int h, GridSize grid) {
  std::vector<std::int64_t> offsets;
  offsets.reserve(static_cast<std::size_t>(w) * h);
  for_each_footprint_cell(shape, x, y, w, h, grid, [&](int cx, int cy) {
    offsets.push_back(static_cast<std::int64_t>(cy) * grid.width + cx);
  });
  return RleMask::from_offsets(std::move(offsets));
}

}  // namespace cwm
