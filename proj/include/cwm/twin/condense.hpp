#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cwm/core/error.hpp"
#include "cwm/image/appearance.hpp"
#include "cwm/image/raster.hpp"
#include "cwm/twin/codec.hpp"
#include "cwm/twin/rdp.hpp"
#include "cwm/twin/templates.hpp"
#include "cwm/twin/twin.hpp"

namespace cwm {

inline CondensedElement condense_element(const ObjectTrace& e, GridSize grid, double epsilon) {
  CondensedElement out;
  out.id = e.id;
  out.category = e.category;
  out.attributes = e.attributes;
  std::vector<MotionKeypoint> path;
  path.reserve(e.records.size());
  bool constant_size = true;
  for (const ElementRecord& r : e.records) {
    path.push_back({r.frame, r.spatial.x, r.spatial.y});
    const std::string label = region_label(r.spatial.x, r.spatial.y, grid);
    if (std::find(out.region_labels.begin(), out.region_labels.end(), label) == out.region_labels.end()) {
      out.region_labels.push_back(label);
    }
    constant_size = constant_size && r.spatial.w == e.records.front().spatial.w && r.spatial.h == e.records.front().spatial.h;
  }
  out.motion_keypoints = simplify_rdp(path, epsilon);
  auto [dmin, dmax] = std::minmax_element(e.depth_trace.begin(), e.depth_trace.end());
  auto [amin, amax] = std::minmax_element(e.area_trace.begin(), e.area_trace.end());
  out.depth_span = {*dmin, *dmax};
  out.area_span = {*amin, *amax};
  if (constant_size) out.size = std::make_pair(e.records.front().spatial.w, e.records.front().spatial.h);
  return out;
}

/// Keypointed, mask-free form of a twin. Motion is simplified with
/// tolerance `epsilon` (cells); spans and region labels are exact.
inline CondensedTwin condense(const TwinSequence& twin, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw Error(Errc::kInvalidParam, "epsilon must be positive");
  codec::require_valid(twin);
  CondensedTwin out;
  out.summary = twin.summary;
  out.spatial_summary = twin.spatial_summary;
  out.grid = twin.grid;
  for (const ObjectTrace& e : twin.elements) out.elements.push_back(condense_element(e, twin.grid, epsilon));
  std::sort(out.elements.begin(), out.elements.end(),
            [](const CondensedElement& a, const CondensedElement& b) { return a.id < b.id; });
  return out;
}

/// Rebuilds a full twin by linear interpolation between keypoints. Records
/// get filled-rectangle masks when the element carries a size; otherwise the
/// mask is left empty (such a result is not a valid twin).
inline TwinSequence expand(const CondensedTwin& condensed, FrameRange range) {
  codec::require_valid(condensed);
  if (range.first > range.last) throw Error(Errc::kRange, "frame range first exceeds last");
  TwinSequence twin;
  twin.summary = condensed.summary;
  twin.spatial_summary = condensed.spatial_summary;
  twin.grid = condensed.grid;
  twin.frame_range = range;
  for (const CondensedElement& e : condensed.elements) {
    const auto& keys = e.motion_keypoints;
    if (!range.contains(keys.front().frame) || !range.contains(keys.back().frame)) {
      throw Error(Errc::kRange, "keypoints of element " + std::to_string(e.id) + " fall outside the frame range");
    }
    ObjectTrace trace;
    trace.id = e.id;
    trace.category = e.category;
    trace.attributes = e.attributes;
    const bool constant_area = e.area_span.min == e.area_span.max;
    std::size_t seg = 0;
    for (int f = keys.front().frame; f <= keys.back().frame; ++f) {
      while (seg + 1 < keys.size() && keys[seg + 1].frame < f) ++seg;
      const Vec2 p = seg + 1 < keys.size() ? interpolate_keypoints(keys[seg], keys[seg + 1], f) : Vec2{keys[seg].x, keys[seg].y};
      ElementRecord rec;
      rec.frame = f;
      rec.spatial.x = p.x;
      rec.spatial.y = p.y;
      rec.spatial.z = e.depth_span.min;
      if (e.size) {
        rec.spatial.w = e.size->first;
        rec.spatial.h = e.size->second;
        const int w = std::max(1, static_cast<int>(std::lround(e.size->first)));
        const int h = std::max(1, static_cast<int>(std::lround(e.size->second)));
        rec.mask = rasterize(Shape::kRectangle, p.x, p.y, w, h, twin.grid);
      }
      trace.frame_captions.push_back(frame_caption(e.attributes, p.x, p.y, twin.grid));
      trace.area_trace.push_back(constant_area || !e.size ? e.area_span.min : static_cast<double>(rec.mask.area()));
      trace.depth_trace.push_back(rec.spatial.z);
      trace.centroid_trace.push_back(p);
      trace.records.push_back(std::move(rec));
    }
    twin.elements.push_back(std::move(trace));
  }
  twin.sort_elements();
  return twin;
}

}  // namespace cwm
