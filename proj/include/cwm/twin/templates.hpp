#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cwm/core/canonical.hpp"
#include "cwm/twin/twin.hpp"

namespace cwm {

/// Coarse 3x3 region of a centroid. The world spans [-0.5, W - 0.5] in cell coordinates.
inline std::string region_label(double x, double y, GridSize grid) {
  static const char* const kRows[] = {"top", "middle", "bottom"};
  static const char* const kCols[] = {"left", "center", "right"};
  auto band = [](double v, int extent) {
    const int b = static_cast<int>(std::floor(3.0 * (v + 0.5) / extent));
    return std::clamp(b, 0, 2);
  };
  const int row = band(y, grid.height);
  const int col = band(x, grid.width);
  if (row == 1 && col == 1) return "center";
  return std::string(kRows[row]) + "-" + kCols[col];
}

inline std::string frame_caption(const std::string& attributes, double x, double y, GridSize grid) {
  return attributes + " at " + region_label(x, y, grid);
}

/// Recomputes captions and numeric traces from the element's records.
inline void rebuild_traces(ObjectTrace& element, GridSize grid) {
  element.frame_captions.clear();
  element.area_trace.clear();
  element.depth_trace.clear();
  element.centroid_trace.clear();
  for (const ElementRecord& rec : element.records) {
    element.frame_captions.push_back(frame_caption(element.attributes, rec.spatial.x, rec.spatial.y, grid));
    element.area_trace.push_back(static_cast<double>(rec.mask.area()));
    element.depth_trace.push_back(rec.spatial.z);
    element.centroid_trace.push_back({rec.spatial.x, rec.spatial.y});
  }
}

inline std::string scene_summary(const TwinSequence& twin) {
  std::string out = "scene with " + std::to_string(twin.elements.size()) + " objects";
  for (std::size_t i = 0; i < twin.elements.size(); ++i) {
    out += i == 0 ? ": " : ", ";
    out += twin.elements[i].attributes;
  }
  return out;
}

inline std::string motion_summary(const TwinSequence& twin) {
  if (twin.elements.empty()) return "no objects";
  std::string out;
  for (const ObjectTrace& e : twin.elements) {
    if (e.records.empty()) continue;
    if (!out.empty()) out += "; ";
    const SpatialProps& a = e.records.front().spatial;
    const SpatialProps& b = e.records.back().spatial;
    const std::string from = region_label(a.x, a.y, twin.grid);
    const std::string to = region_label(b.x, b.y, twin.grid);
    if (a.x == b.x && a.y == b.y) {
      out += e.attributes + " stays at " + from;
    } else if (from == to) {
      out += e.attributes + " moves within " + from;
    } else {
      out += e.attributes + " moves from " + from + " to " + to;
    }
    out += " (frames " + std::to_string(e.records.front().frame) + "-" + std::to_string(e.records.back().frame) + ")";
  }
  return out;
}

/// Sorts elements, rebuilds every trace and regenerates both summaries.
inline void finalize_twin(TwinSequence& twin) {
  twin.sort_elements();
  for (ObjectTrace& e : twin.elements) rebuild_traces(e, twin.grid);
  twin.summary = scene_summary(twin);
  twin.spatial_summary = motion_summary(twin);
}

/// Keeps only records inside `range`; elements left without records are dropped.
inline TwinSequence crop_twin(const TwinSequence& twin, FrameRange range) {
  TwinSequence out = twin;
  out.frame_range = range;
  out.elements.clear();
  for (const ObjectTrace& e : twin.elements) {
    ObjectTrace t = e;
    t.records.clear();
    for (const ElementRecord& r : e.records) {
      if (range.contains(r.frame)) t.records.push_back(r);
    }
    if (t.records.empty()) continue;
    rebuild_traces(t, twin.grid);
    out.elements.push_back(std::move(t));
  }
  return out;
}

inline SpatialProps quantized(SpatialProps s) {
  return {quantize(s.x), quantize(s.y), quantize(s.z), quantize(s.w), quantize(s.h)};
}

}  // namespace cwm
