#pragma once

#include <algorithm>
#include <cstdint>
#include <tuple>
#include <vector>

#include "cwm/core/types.hpp"
#include "cwm/image/frame.hpp"
#include "cwm/twin/rle.hpp"

namespace cwm {

struct RegionMask {
  Rgb color;
  RleMask mask;
  Vec2 centroid;
  std::int64_t area = 0;
  CellBox bbox;

  friend bool operator==(const RegionMask&, const RegionMask&) = default;
};

inline RegionMask make_region(Rgb color, RleMask mask, GridSize grid) {
  RegionMask r;
  r.color = color;
  r.centroid = mask.centroid(grid);
  r.area = mask.area();
  r.bbox = mask.bbox(grid);
  r.mask = std::move(mask);
  return r;
}

inline void sort_regions(std::vector<RegionMask>& regions) {
  std::sort(regions.begin(), regions.end(), [](const RegionMask& a, const RegionMask& b) {
    return std::tie(a.color, a.bbox.x0, a.bbox.y0) < std::tie(b.color, b.bbox.x0, b.bbox.y0);
  });
}

/// 4-connected components of identical non-background color, sorted by
/// (color, x0, y0).
inline std::vector<RegionMask> segment(const Frame& frame, Rgb background) {
  const GridSize grid{frame.width, frame.height};
  const auto n = static_cast<std::size_t>(grid.cells());
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<RegionMask> out;
  std::vector<std::int64_t> stack;
  std::vector<std::int64_t> cells;
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      const std::int64_t start = static_cast<std::int64_t>(y) * frame.width + x;
      if (seen[static_cast<std::size_t>(start)]) continue;
      const Rgb color = frame.at(x, y);
      seen[static_cast<std::size_t>(start)] = 1;
      if (color == background) continue;
      cells.clear();
      stack.assign(1, start);
      while (!stack.empty()) {
        const std::int64_t c = stack.back();
        stack.pop_back();
        cells.push_back(c);
        const int cx = static_cast<int>(c % frame.width);
        const int cy = static_cast<int>(c / frame.width);
        const int nx[4] = {cx - 1, cx + 1, cx, cx};
        const int ny[4] = {cy, cy, cy - 1, cy + 1};
        for (int k = 0; k < 4; ++k) {
          if (nx[k] < 0 || ny[k] < 0 || nx[k] >= frame.width || ny[k] >= frame.height) continue;
          const std::int64_t o = static_cast<std::int64_t>(ny[k]) * frame.width + nx[k];
          if (seen[static_cast<std::size_t>(o)] || frame.at(nx[k], ny[k]) != color) continue;
          seen[static_cast<std::size_t>(o)] = 1;
          stack.push_back(o);
        }
      }
      out.push_back(make_region(color, RleMask::from_offsets(cells), grid));
    }
  }
  sort_regions(out);
  return out;
}

/// One observation per color: components sharing a color are united, since
/// scene colors identify objects.
inline std::vector<RegionMask> merge_by_color(const std::vector<RegionMask>& regions, GridSize grid) {
  std::vector<RegionMask> out;
  for (const RegionMask& r : regions) {
    auto it = std::find_if(out.begin(), out.end(), [&](const RegionMask& o) { return o.color == r.color; });
    if (it == out.end()) {
      out.push_back(r);
    } else {
      *it = make_region(r.color, it->mask.united(r.mask), grid);
    }
  }
  sort_regions(out);
  return out;
}

}  // namespace cwm
