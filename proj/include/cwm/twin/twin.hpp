#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "cwm/core/types.hpp"
#include "cwm/twin/rle.hpp"

namespace cwm {

/// Centroid (x, y), depth z (larger = farther) and bounding size (w, h), in cells.
struct SpatialProps {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double w = 1.0;
  double h = 1.0;

  friend bool operator==(const SpatialProps&, const SpatialProps&) = default;
};

/// One object instance in one frame: the (id, category, attributes, spatial, mask) tuple.
struct ObjectRecord {
  int id = 0;
  std::string category;
  std::string attributes;
  SpatialProps spatial;
  RleMask mask;

  friend bool operator==(const ObjectRecord&, const ObjectRecord&) = default;
};

/// Per-frame entry stored under an element; identity and appearance live on the element.
struct ElementRecord {
  int frame = 0;
  SpatialProps spatial;
  RleMask mask;

  friend bool operator==(const ElementRecord&, const ElementRecord&) = default;
};

/// One tracked object: appearance, per-frame records over a contiguous
/// presence interval, and the numeric traces derived from them.
struct ObjectTrace {
  int id = 0;
  std::string category;
  std::string attributes;
  std::vector<std::string> frame_captions;
  std::vector<double> area_trace;
  std::vector<double> depth_trace;
  std::vector<Vec2> centroid_trace;
  std::vector<ElementRecord> records;

  FrameRange presence() const {
    if (records.empty()) return {0, -1};
    return {records.front().frame, records.back().frame};
  }

  const ElementRecord* at(int frame) const {
    if (records.empty()) return nullptr;
    const int index = frame - records.front().frame;
    if (index < 0 || index >= static_cast<int>(records.size())) return nullptr;
    const ElementRecord& rec = records[static_cast<std::size_t>(index)];
    return rec.frame == frame ? &rec : nullptr;
  }

  friend bool operator==(const ObjectTrace&, const ObjectTrace&) = default;
};

/// Digital-twin representation of a frame span.
struct TwinSequence {
  std::string summary;
  std::string spatial_summary;
  GridSize grid{64, 64};
  FrameRange frame_range;
  std::vector<ObjectTrace> elements;

  const ObjectTrace* find(int id) const {
    for (const auto& e : elements) {
      if (e.id == id) return &e;
    }
    return nullptr;
  }

  std::vector<ObjectRecord> records_at(int frame) const {
    std::vector<ObjectRecord> out;
    for (const auto& e : elements) {
      if (const ElementRecord* rec = e.at(frame)) {
        out.push_back({e.id, e.category, e.attributes, rec->spatial, rec->mask});
      }
    }
    return out;
  }

  void sort_elements() {
    std::sort(elements.begin(), elements.end(), [](const ObjectTrace& a, const ObjectTrace& b) { return a.id < b.id; });
  }

  friend bool operator==(const TwinSequence&, const TwinSequence&) = default;
};

struct ValueSpan {
  double min = 0.0;
  double max = 0.0;

  friend bool operator==(const ValueSpan&, const ValueSpan&) = default;
};

struct MotionKeypoint {
  int frame = 0;
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const MotionKeypoint&, const MotionKeypoint&) = default;
};

struct CondensedElement {
  int id = 0;
  std::string category;
  std::string attributes;
  std::vector<std::string> region_labels;
  std::vector<MotionKeypoint> motion_keypoints;
  ValueSpan depth_span;
  ValueSpan area_span;
  std::optional<std::pair<double, double>> size;

  friend bool operator==(const CondensedElement&, const CondensedElement&) = default;
};

/// Compact text-conditioning form: summaries plus keypointed motion and spans.
struct CondensedTwin {
  std::string summary;
  std::string spatial_summary;
  GridSize grid{64, 64};
  std::vector<CondensedElement> elements;

  friend bool operator==(const CondensedTwin&, const CondensedTwin&) = default;
};

}  // namespace cwm
