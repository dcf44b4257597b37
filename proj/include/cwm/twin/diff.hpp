#pragma once

#include <algorithm>
#include <cmath>
#include <iterator>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cwm/twin/twin.hpp"

namespace cwm {

/// How one element's record differs at one frame; b minus a for the deltas.
struct FrameDelta {
  int frame = 0;
  bool only_in_a = false;
  bool only_in_b = false;
  double dx = 0.0;
  double dy = 0.0;
  double dz = 0.0;
  double dw = 0.0;
  double dh = 0.0;
  bool mask_changed = false;

  friend bool operator==(const FrameDelta&, const FrameDelta&) = default;
};

struct ElementChange {
  int id = 0;
  bool category_changed = false;
  bool attributes_changed = false;
  bool captions_changed = false;
  std::vector<FrameDelta> frames;

  friend bool operator==(const ElementChange&, const ElementChange&) = default;
};

struct TwinDiff {
  std::vector<int> added;
  std::vector<int> removed;
  std::vector<ElementChange> changed;
  bool summary_changed = false;
  bool spatial_summary_changed = false;
  bool grid_changed = false;
  bool frame_range_changed = false;

  bool empty() const {
    return added.empty() && removed.empty() && changed.empty() && !summary_changed && !spatial_summary_changed &&
           !grid_changed && !frame_range_changed;
  }

  /// First frame at which any element differs, or nullopt.
  std::optional<int> first_changed_frame() const {
    std::optional<int> out;
    for (const ElementChange& c : changed) {
      for (const FrameDelta& d : c.frames) {
        if (!out || d.frame < *out) out = d.frame;
      }
    }
    return out;
  }
};

struct DiffOptions {
  /// Centroid deltas at or below this are ignored. When positive, masks are
  /// not compared (they follow the quantized centroid).
  double position_tolerance = 0.0;
  /// When set, summaries and frame_range are not compared.
  bool elements_only = false;
};

inline TwinDiff diff_twins(const TwinSequence& a, const TwinSequence& b, DiffOptions options = {}) {
  TwinDiff out;
  if (!options.elements_only) {
    out.summary_changed = a.summary != b.summary;
    out.spatial_summary_changed = a.spatial_summary != b.spatial_summary;
    out.frame_range_changed = a.frame_range != b.frame_range;
  }
  out.grid_changed = a.grid != b.grid;
  std::set<int> ids_a;
  std::set<int> ids_b;
  for (const auto& e : a.elements) ids_a.insert(e.id);
  for (const auto& e : b.elements) ids_b.insert(e.id);
  std::set_difference(ids_a.begin(), ids_a.end(), ids_b.begin(), ids_b.end(), std::back_inserter(out.removed));
  std::set_difference(ids_b.begin(), ids_b.end(), ids_a.begin(), ids_a.end(), std::back_inserter(out.added));

  const double tol = options.position_tolerance;
  auto differs = [tol](double u, double v) { return std::abs(u - v) > tol; };
  for (int id : ids_a) {
    if (!ids_b.count(id)) continue;
    const ObjectTrace& ea = *a.find(id);
    const ObjectTrace& eb = *b.find(id);
    ElementChange change;
    change.id = id;
    change.category_changed = ea.category != eb.category;
    change.attributes_changed = ea.attributes != eb.attributes;
    change.captions_changed = tol == 0.0 && ea.frame_captions != eb.frame_captions;
    const FrameRange pa = ea.presence();
    const FrameRange pb = eb.presence();
    const int lo = std::min(pa.first, pb.first);
    const int hi = std::max(pa.last, pb.last);
    for (int f = lo; f <= hi; ++f) {
      const ElementRecord* ra = ea.at(f);
      const ElementRecord* rb = eb.at(f);
      if (!ra && !rb) continue;
      FrameDelta d;
      d.frame = f;
      if (!ra || !rb) {
        d.only_in_a = ra != nullptr;
        d.only_in_b = rb != nullptr;
        change.frames.push_back(d);
        continue;
      }
      const SpatialProps& sa = ra->spatial;
      const SpatialProps& sb = rb->spatial;
      const bool moved = differs(sa.x, sb.x) || differs(sa.y, sb.y);
      const bool other = sa.z != sb.z || sa.w != sb.w || sa.h != sb.h;
      d.mask_changed = tol == 0.0 && ra->mask != rb->mask;
      if (moved || other || d.mask_changed) {
        d.dx = sb.x - sa.x;
        d.dy = sb.y - sa.y;
        d.dz = sb.z - sa.z;
        d.dw = sb.w - sa.w;
        d.dh = sb.h - sa.h;
        change.frames.push_back(d);
      }
    }
    if (change.category_changed || change.attributes_changed || change.captions_changed || !change.frames.empty()) {
      out.changed.push_back(std::move(change));
    }
  }
  return out;
}

}  // namespace cwm
