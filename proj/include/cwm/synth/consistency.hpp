#pragma once

#include <vector>

#include "cwm/core/error.hpp"
#include "cwm/image/appearance.hpp"
#include "cwm/perception/segment.hpp"
#include "cwm/synth/render.hpp"

namespace cwm {

inline constexpr double kDefaultConsistencyThreshold = 0.9;

/// Agreement between a frame and the records it should show. Each record's
/// painter-resolved visible cells are matched with the observed region of
/// the same color by IoU; a record with no region and a region with no
/// record each contribute 0, and records hidden entirely by nearer ones are
/// not counted. Blank frame against no records is 1.0.
inline double check_consistency(const Frame& frame, const std::vector<ObjectRecord>& records, Rgb background = {}) {
  const GridSize grid{frame.width, frame.height};
  const auto observed = merge_by_color(segment(frame, background), grid);
  const auto expected = visible_masks(records, grid);
  std::vector<bool> matched(observed.size(), false);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Rgb color = require_color(records[i].attributes);
    if (expected[i].empty()) continue;
    ++count;
    for (std::size_t j = 0; j < observed.size(); ++j) {
      if (observed[j].color != color) continue;
      matched[j] = true;
      total += iou(expected[i], observed[j].mask);
      break;
    }
  }
  for (bool m : matched) count += m ? 0 : 1;
  return count == 0 ? 1.0 : total / static_cast<double>(count);
}

}  // namespace cwm
