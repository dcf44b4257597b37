#pragma once

#include "cwm/core/error.hpp"
#include "cwm/core/types.hpp"
#include "cwm/image/frame.hpp"

namespace cwm {

/// Hard-edged rendering: one cell becomes a `scale` x `scale` pixel block.
struct RenderStyle {
  Rgb background{0, 0, 0};
  int scale = 1;

  friend bool operator==(const RenderStyle&, const RenderStyle&) = default;
};

inline void require_style(const RenderStyle& style) {
  if (style.scale < 1) throw Error(Errc::kInvalidParam, "render scale must be at least 1");
}

inline Frame blank_frame(GridSize grid, const RenderStyle& style) {
  return Frame(grid.width * style.scale, grid.height * style.scale, style.background);
}

inline void paint_cell(Frame& frame, int cx, int cy, Rgb color, int scale) {
  for (int dy = 0; dy < scale; ++dy) {
    for (int dx = 0; dx < scale; ++dx) frame.set(cx * scale + dx, cy * scale + dy, color);
  }
}

}  // namespace cwm
