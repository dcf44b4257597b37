#pragma once

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "cwm/twin/twin.hpp"

namespace cwm {

struct Violation {
  std::string code;
  std::string path;
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

namespace detail {

inline bool all_finite(const SpatialProps& s) {
  return std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.z) && std::isfinite(s.w) && std::isfinite(s.h);
}

}  // namespace detail

/// Checks every TwinSequence invariant. Empty result means the twin is valid.
inline std::vector<Violation> validate(const TwinSequence& twin) {
  std::vector<Violation> out;
  auto add = [&out](std::string code, std::string path, std::string message) {
    out.push_back({std::move(code), std::move(path), std::move(message)});
  };
  constexpr double kCentroidTolerance = 0.5 + 1e-9;

  if (twin.grid.width <= 0 || twin.grid.height <= 0) {
    add("GRID", "grid", "grid dimensions must be positive");
    return out;
  }
  if (twin.frame_range.first > twin.frame_range.last) {
    add("FRAME_RANGE", "frame_range", "first frame after last frame");
  }

  std::set<int> seen;
  for (std::size_t ei = 0; ei < twin.elements.size(); ++ei) {
    const ObjectTrace& e = twin.elements[ei];
    const std::string base = "major_elements[" + std::to_string(ei) + "]";
    if (e.id < 0) add("NEGATIVE_ID", base + ".id", "id must be non-negative");
    if (!seen.insert(e.id).second) add("DUPLICATE_ID", base + ".id", "id " + std::to_string(e.id) + " appears more than once");
    if (e.records.empty()) {
      add("EMPTY_ELEMENT", base + ".records", "element " + std::to_string(e.id) + " has no records");
      continue;
    }
    const std::size_t n = e.records.size();
    if (e.frame_captions.size() != n || e.area_trace.size() != n || e.depth_trace.size() != n ||
        e.centroid_trace.size() != n) {
      add("TRACE_LENGTH", base, "trace lengths differ from the " + std::to_string(n) + "-frame presence of element " +
                                    std::to_string(e.id));
    }
    for (std::size_t ri = 0; ri < n; ++ri) {
      const ElementRecord& rec = e.records[ri];
      const std::string path = base + ".records[" + std::to_string(ri) + "]";
      if (ri > 0 && rec.frame != e.records[ri - 1].frame + 1) {
        add("PRESENCE_GAP", path + ".frame", "records of element " + std::to_string(e.id) + " are not contiguous");
      }
      if (!twin.frame_range.contains(rec.frame)) {
        add("RECORD_OUT_OF_RANGE", path + ".frame", "frame " + std::to_string(rec.frame) + " outside frame_range");
      }
      const SpatialProps& s = rec.spatial;
      if (!detail::all_finite(s)) {
        add("NONFINITE", path, "spatial values must be finite");
        continue;
      }
      if (s.w <= 0 || s.h <= 0) add("SIZE_NONPOSITIVE", path, "w and h must be positive");
      if (s.x < -0.5 || s.x > twin.grid.width - 0.5 || s.y < -0.5 || s.y > twin.grid.height - 0.5) {
        add("OUT_OF_BOUNDS", path, "centroid outside the world");
      }
      if (!rec.mask.well_formed(twin.grid)) {
        add("MASK_MALFORMED", path + ".mask", "runs must be ascending, maximal and inside the grid");
        continue;
      }
      if (rec.mask.empty()) {
        add("MASK_EMPTY", path + ".mask", "mask of element " + std::to_string(e.id) + " is empty");
        continue;
      }
      const CellBox box = rec.mask.bbox(twin.grid);
      if (std::abs(box.w - s.w) > 1.0 + 1e-9 || std::abs(box.h - s.h) > 1.0 + 1e-9) {
        add("MASK_BBOX", path + ".mask", "mask bounding box does not match (w, h)");
      }
      const Vec2 c = rec.mask.centroid(twin.grid);
      if (std::abs(c.x - s.x) > kCentroidTolerance || std::abs(c.y - s.y) > kCentroidTolerance) {
        add("CENTROID_MISMATCH", path, "mask centroid differs from (x, y) at element " + std::to_string(e.id));
      }
    }
    const std::size_t m = std::min({n, e.area_trace.size(), e.depth_trace.size(), e.centroid_trace.size()});
    for (std::size_t i = 0; i < m; ++i) {
      if (e.area_trace[i] < 0 || !std::isfinite(e.area_trace[i])) {
        add("AREA_NEGATIVE", base + ".area_trace[" + std::to_string(i) + "]", "area must be non-negative");
      }
      const SpatialProps& s = e.records[i].spatial;
      if (e.depth_trace[i] != s.z || e.centroid_trace[i].x != s.x || e.centroid_trace[i].y != s.y) {
        add("TRACE_MISMATCH", base + ".centroid_trace[" + std::to_string(i) + "]", "trace disagrees with record");
      }
    }
  }
  return out;
}

inline std::vector<Violation> validate(const CondensedTwin& twin) {
  std::vector<Violation> out;
  auto add = [&out](std::string code, std::string path, std::string message) {
    out.push_back({std::move(code), std::move(path), std::move(message)});
  };
  if (twin.grid.width <= 0 || twin.grid.height <= 0) add("GRID", "grid", "grid dimensions must be positive");
  std::set<int> seen;
  for (std::size_t ei = 0; ei < twin.elements.size(); ++ei) {
    const CondensedElement& e = twin.elements[ei];
    const std::string base = "elements[" + std::to_string(ei) + "]";
    if (e.id < 0) add("NEGATIVE_ID", base + ".id", "id must be non-negative");
    if (!seen.insert(e.id).second) add("DUPLICATE_ID", base + ".id", "id " + std::to_string(e.id) + " repeated");
    if (e.motion_keypoints.empty()) add("NO_KEYPOINTS", base + ".motion_keypoints", "at least one keypoint required");
    for (std::size_t i = 1; i < e.motion_keypoints.size(); ++i) {
      if (e.motion_keypoints[i].frame <= e.motion_keypoints[i - 1].frame) {
        add("KEYPOINT_ORDER", base + ".motion_keypoints[" + std::to_string(i) + "]", "frames must ascend");
      }
    }
    for (const auto& k : e.motion_keypoints) {
      if (!std::isfinite(k.x) || !std::isfinite(k.y)) add("NONFINITE", base + ".motion_keypoints", "non-finite keypoint");
    }
    if (!(e.depth_span.min <= e.depth_span.max)) add("SPAN_ORDER", base + ".depth_span", "min exceeds max");
    if (!(e.area_span.min <= e.area_span.max)) add("SPAN_ORDER", base + ".area_span", "min exceeds max");
    if (e.area_span.min < 0) add("AREA_NEGATIVE", base + ".area_span", "area must be non-negative");
    if (e.size && (e.size->first <= 0 || e.size->second <= 0)) add("SIZE_NONPOSITIVE", base + ".size", "size must be positive");
  }
  return out;
}

inline std::string describe(const std::vector<Violation>& violations) {
  std::string out;
  for (const Violation& v : violations) {
    if (!out.empty()) out += "; ";
    out += v.code + " at " + v.path + " (" + v.message + ")";
  }
  return out;
}

}  // namespace cwm
