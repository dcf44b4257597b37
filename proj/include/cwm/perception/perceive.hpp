#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cwm/core/canonical.hpp"
#include "cwm/core/error.hpp"
#include "cwm/image/appearance.hpp"
#include "cwm/image/frame.hpp"
#include "cwm/perception/depth.hpp"
#include "cwm/perception/segment.hpp"
#include "cwm/perception/track.hpp"
#include "cwm/twin/templates.hpp"
#include "cwm/twin/twin.hpp"

namespace cwm {

namespace detail {

struct TrackState {
  Rgb color;
  Vec2 centroid;
  double max_area = 0.0;
  double z = 0.0;
  /// Bounding box size when the object was most visible.
  int full_w = 0;
  int full_h = 0;
  /// Mask at that moment and its bounding box.
  RleMask full_mask;
  CellBox full_box;
  /// Unoccluded footprint box estimate and its last per-frame shift.
  std::optional<CellBox> amodal;
  int step_x = 0;
  int step_y = 0;
  ObjectTrace trace;
};

/// Box of the object's full size that contains the visible box, placed
/// nearest the position history predicts.
inline std::optional<CellBox> expected_box(const TrackState& s, const CellBox& visible) {
  if (!s.amodal || s.full_w <= 0) return std::nullopt;
  auto place = [](int predicted, int lo_edge, int extent, int full) {
    const int lo = lo_edge + extent - full;
    return std::clamp(predicted, std::min(lo, lo_edge), std::max(lo, lo_edge));
  };
  CellBox box;
  box.w = s.full_w;
  box.h = s.full_h;
  box.x0 = place(s.amodal->x0 + s.step_x, visible.x0, visible.w, box.w);
  box.y0 = place(s.amodal->y0 + s.step_y, visible.y0, visible.h, box.h);
  return box;
}

/// A fully filled bounding box reads as a rectangle; anything else as a circle.
inline Shape classify_shape(const ObjectTrace& trace, GridSize grid) {
  const ElementRecord* best = &trace.records.front();
  for (const ElementRecord& r : trace.records) {
    if (r.mask.area() > best->mask.area()) best = &r;
  }
  const CellBox box = best->mask.bbox(grid);
  return best->mask.area() == static_cast<std::int64_t>(box.w) * box.h ? Shape::kRectangle : Shape::kCircle;
}

}  // namespace detail

/// Frames to twin: per-frame color segmentation, greedy tracking, occlusion
/// depth, then template captions and summaries.
inline TwinSequence perceive(const Video& video, Rgb background = {0, 0, 0}) {
  if (video.frames.empty()) throw Error(Errc::kInvalidParam, "perception needs at least one frame");
  const Frame& first = video.frames.front();
  for (const Frame& f : video.frames) require_same_dimensions(first, f);
  const GridSize grid{first.width, first.height};

  std::map<int, detail::TrackState> active;
  std::vector<detail::TrackState> finished;
  int next_id = 1;
  for (std::size_t index = 0; index < video.frames.size(); ++index) {
    const int frame_index = video.first_frame + static_cast<int>(index);
    const auto regions = merge_by_color(segment(video.frames[index], background), grid);
    std::vector<TrackedObject> previous;
    for (const auto& [id, s] : active) previous.push_back({id, s.centroid, s.color});
    const TrackAssignment assignment = track(previous, regions, next_id);
    for (int id : assignment.issued) next_id = std::max(next_id, id + 1);

    std::vector<DepthPrior> priors;
    for (std::size_t r = 0; r < regions.size(); ++r) {
      auto it = active.find(assignment.ids[r]);
      if (it == active.end()) {
        const CellBox& b = regions[r].bbox;
        DepthPrior fresh;
        fresh.emerging = index > 0 && b.x0 > 0 && b.y0 > 0 && b.x0 + b.w < grid.width && b.y0 + b.h < grid.height;
        priors.push_back(fresh);
      } else {
        const detail::TrackState& s = it->second;
        DepthPrior prior;
        prior.max_area = s.max_area;
        prior.z = s.z;
        prior.expected = detail::expected_box(s, regions[r].bbox);
        if (prior.expected) {
          prior.footprint =
              s.full_mask.translated(prior.expected->x0 - s.full_box.x0, prior.expected->y0 - s.full_box.y0, grid);
        }
        priors.push_back(std::move(prior));
      }
    }
    const std::vector<double> z = infer_depth_order(regions, priors, grid);

    for (int id : assignment.departed) {
      finished.push_back(std::move(active.at(id)));
      active.erase(id);
    }
    for (std::size_t r = 0; r < regions.size(); ++r) {
      const RegionMask& region = regions[r];
      detail::TrackState& s = active[assignment.ids[r]];
      s.color = region.color;
      s.centroid = region.centroid;
      const std::optional<CellBox> box = priors[r].expected;
      if (static_cast<double>(region.area) >= s.max_area) {
        s.max_area = static_cast<double>(region.area);
        s.full_w = region.bbox.w;
        s.full_h = region.bbox.h;
        s.full_mask = region.mask;
        s.full_box = region.bbox;
      }
      const CellBox now = box && box->w == s.full_w && box->h == s.full_h ? *box : region.bbox;
      if (s.amodal) {
        s.step_x = now.x0 - s.amodal->x0;
        s.step_y = now.y0 - s.amodal->y0;
      }
      s.amodal = now;
      s.z = z[r];
      s.trace.id = assignment.ids[r];
      ElementRecord rec;
      rec.frame = frame_index;
      rec.spatial = quantized({region.centroid.x, region.centroid.y, z[r], static_cast<double>(region.bbox.w),
                               static_cast<double>(region.bbox.h)});
      rec.mask = region.mask;
      s.trace.records.push_back(std::move(rec));
    }
  }
  for (auto& [id, s] : active) finished.push_back(std::move(s));

  TwinSequence twin;
  twin.grid = grid;
  twin.frame_range = {video.first_frame, video.last_frame()};
  for (detail::TrackState& s : finished) {
    const Shape shape = detail::classify_shape(s.trace, grid);
    s.trace.category = std::string(shape_name(shape));
    s.trace.attributes = attributes_text(s.color, shape);
    twin.elements.push_back(std::move(s.trace));
  }
  finalize_twin(twin);
  return twin;
}

}  // namespace cwm
