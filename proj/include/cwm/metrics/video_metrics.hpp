#pragma once

#include <vector>

#include "cwm/core/error.hpp"
#include "cwm/image/appearance.hpp"
#include "cwm/image/frame.hpp"
#include "cwm/metrics/image_quality.hpp"
#include "cwm/perception/segment.hpp"
#include "cwm/synth/render.hpp"
#include "cwm/twin/twin.hpp"

namespace cwm {

/// Mean SSIM of consecutive frames.
inline double frame_coherence(const Video& video) {
  if (video.frames.size() < 2) throw Error(Errc::kTooShort, "coherence needs at least two frames");
  double total = 0.0;
  for (std::size_t i = 1; i < video.frames.size(); ++i) total += ssim(video.frames[i - 1], video.frames[i]);
  return total / static_cast<double>(video.frames.size() - 1);
}

/// Grounding score of every twin record present at `frame_index` against the
/// regions observed in `frame` (visible cells vs. same-color region). The
/// returned vector has one IoU per record, in record order.
inline std::vector<double> grounding_scores(const Frame& frame, const TwinSequence& twin, int frame_index,
                                            Rgb background = {}) {
  const auto records = twin.records_at(frame_index);
  const auto expected = visible_masks(records, twin.grid);
  const auto observed = merge_by_color(segment(frame, background), twin.grid);
  std::vector<double> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Rgb color = require_color(records[i].attributes);
    RleMask seen;
    for (const RegionMask& r : observed) {
      if (r.color == color) seen = r.mask;
    }
    out.push_back(iou(expected[i], seen));
  }
  return out;
}

/// Mean IoU over all (frame, object) pairs; a twin without records scores 1.0.
inline double grounding_iou(const Video& video, const TwinSequence& twin, Rgb background = {}) {
  if (static_cast<int>(video.frames.size()) != twin.frame_range.span()) {
    throw Error(Errc::kRangeMismatch, "video has " + std::to_string(video.frames.size()) + " frames, twin spans " +
                                          std::to_string(twin.frame_range.span()));
  }
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < video.frames.size(); ++i) {
    const Frame& f = video.frames[i];
    if (f.width != twin.grid.width || f.height != twin.grid.height) {
      throw Error(Errc::kDimensionMismatch, "video frames do not match the twin grid");
    }
    for (double s : grounding_scores(f, twin, twin.frame_range.first + static_cast<int>(i), background)) {
      total += s;
      ++count;
    }
  }
  return count == 0 ? 1.0 : total / static_cast<double>(count);
}

}  // namespace cwm
