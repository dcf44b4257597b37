#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "cwm/core/error.hpp"
#include "cwm/image/appearance.hpp"
#include "cwm/image/frame.hpp"
#include "cwm/image/raster.hpp"
#include "cwm/image/style.hpp"
#include "cwm/twin/twin.hpp"

namespace cwm {

/// Cells a record covers: its mask, or its shape rasterized from (x, y, w, h)
/// when the mask is empty.
inline RleMask record_cells(const ObjectRecord& r, GridSize grid) {
  if (!r.mask.empty()) return r.mask;
  const Shape shape = require_shape(r.category);
  const int w = std::max(1, static_cast<int>(std::lround(r.spatial.w)));
  const int h = std::max(1, static_cast<int>(std::lround(r.spatial.h)));
  return rasterize(shape, r.spatial.x, r.spatial.y, w, h, grid);
}

/// Indices of `records` in painting order: farthest z first; within equal z
/// higher ids first so the lowest id ends on top.
inline std::vector<std::size_t> painter_order(const std::vector<ObjectRecord>& records) {
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (records[a].spatial.z != records[b].spatial.z) return records[a].spatial.z > records[b].spatial.z;
    return records[a].id > records[b].id;
  });
  return order;
}

/// Per-record visible cells after occlusion, index-aligned with `records`.
inline std::vector<RleMask> visible_masks(const std::vector<ObjectRecord>& records, GridSize grid) {
  std::vector<int> owner(static_cast<std::size_t>(grid.cells()), -1);
  for (std::size_t i : painter_order(records)) {
    record_cells(records[i], grid).for_each_cell([&](std::int64_t c) { owner[static_cast<std::size_t>(c)] = static_cast<int>(i); });
  }
  std::vector<std::vector<std::int64_t>> cells(records.size());
  for (std::size_t c = 0; c < owner.size(); ++c) {
    if (owner[c] >= 0) cells[static_cast<std::size_t>(owner[c])].push_back(static_cast<std::int64_t>(c));
  }
  std::vector<RleMask> out;
  for (auto& v : cells) out.push_back(RleMask::from_offsets(std::move(v)));
  return out;
}

/// Painter's algorithm over one frame's records. Colors and shapes come from
/// the attribute and category text; the record mask supplies the pixels.
inline Frame render_frame(const std::vector<ObjectRecord>& records, GridSize grid, const RenderStyle& style = {}) {
  require_style(style);
  Frame frame = blank_frame(grid, style);
  for (std::size_t i : painter_order(records)) {
    const ObjectRecord& r = records[i];
    require_shape(r.category);
    const Rgb color = require_color(r.attributes);
    record_cells(r, grid).for_each_cell([&](std::int64_t c) {
      paint_cell(frame, static_cast<int>(c % grid.width), static_cast<int>(c / grid.width), color, style.scale);
    });
  }
  return frame;
}

inline Video render_video(const TwinSequence& twin, const RenderStyle& style = {}, double fps = 24.0) {
  Video video;
  video.first_frame = twin.frame_range.first;
  video.fps = fps;
  for (int f = twin.frame_range.first; f <= twin.frame_range.last; ++f) {
    video.frames.push_back(render_frame(twin.records_at(f), twin.grid, style));
  }
  return video;
}

/// Re-renders only where the edit changed something: pixels outside the
/// union of changed objects' factual and edited cells keep the original.
inline Frame edit_first_frame(const Frame& original, const std::vector<ObjectRecord>& factual,
                              const std::vector<ObjectRecord>& edited, GridSize grid, const RenderStyle& style = {}) {
  require_style(style);
  if (original.width != grid.width * style.scale || original.height != grid.height * style.scale) {
    throw Error(Errc::kDimensionMismatch, "original frame does not match the twin grid");
  }
  RleMask changed;
  auto find = [](const std::vector<ObjectRecord>& v, int id) -> const ObjectRecord* {
    for (const auto& r : v) {
      if (r.id == id) return &r;
    }
    return nullptr;
  };
  for (const ObjectRecord& r : factual) {
    const ObjectRecord* e = find(edited, r.id);
    if (!e || !(*e == r)) changed = changed.united(record_cells(r, grid));
  }
  for (const ObjectRecord& r : edited) {
    const ObjectRecord* f = find(factual, r.id);
    if (!f || !(*f == r)) changed = changed.united(record_cells(r, grid));
  }
  if (changed.empty()) return original;
  const Frame rendered = render_frame(edited, grid, style);
  Frame out = original;
  changed.for_each_cell([&](std::int64_t c) {
    const int cx = static_cast<int>(c % grid.width);
    const int cy = static_cast<int>(c / grid.width);
    for (int dy = 0; dy < style.scale; ++dy) {
      for (int dx = 0; dx < style.scale; ++dx) {
        const int px = cx * style.scale + dx;
        const int py = cy * style.scale + dy;
        out.set(px, py, rendered.at(px, py));
      }
    }
  });
  return out;
}

}  // namespace cwm
