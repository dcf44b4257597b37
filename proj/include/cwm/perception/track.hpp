#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <tuple>
#include <vector>

#include "cwm/image/appearance.hpp"
#include "cwm/perception/segment.hpp"
#include "cwm/twin/twin.hpp"

namespace cwm {

inline constexpr double kTrackingGate = 8.0;

/// A previously tracked object as the matcher sees it.
struct TrackedObject {
  int id = 0;
  Vec2 centroid;
  std::optional<Rgb> color;
};

struct TrackAssignment {
  /// Id per region, index-aligned with the input regions.
  std::vector<int> ids;
  /// Previous ids with no match, ascending.
  std::vector<int> departed;
  /// Ids issued to new regions, ascending.
  std::vector<int> issued;
};

/// Greedy nearest-centroid matching in ascending distance order, gated at
/// `gate` cells. Ties go to the lower region index, then the lower previous
/// id. A known color must match. Unmatched regions receive `next_id`,
/// `next_id + 1`, ... in region order.
inline TrackAssignment track(const std::vector<TrackedObject>& previous, const std::vector<RegionMask>& regions,
                             int next_id, double gate = kTrackingGate) {
  struct Candidate {
    double distance;
    std::size_t region;
    std::size_t prev;
  };
  std::vector<Candidate> candidates;
  for (std::size_t r = 0; r < regions.size(); ++r) {
    for (std::size_t p = 0; p < previous.size(); ++p) {
      if (previous[p].color && *previous[p].color != regions[r].color) continue;
      const double d = std::hypot(regions[r].centroid.x - previous[p].centroid.x,
                                  regions[r].centroid.y - previous[p].centroid.y);
      if (d <= gate) candidates.push_back({d, r, p});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
    return std::tie(a.distance, a.region, previous[a.prev].id) < std::tie(b.distance, b.region, previous[b.prev].id);
  });
  TrackAssignment out;
  out.ids.assign(regions.size(), -1);
  std::vector<bool> used(previous.size(), false);
  for (const Candidate& c : candidates) {
    if (out.ids[c.region] >= 0 || used[c.prev]) continue;
    out.ids[c.region] = previous[c.prev].id;
    used[c.prev] = true;
  }
  for (std::size_t r = 0; r < regions.size(); ++r) {
    if (out.ids[r] < 0) {
      out.ids[r] = next_id++;
      out.issued.push_back(out.ids[r]);
    }
  }
  for (std::size_t p = 0; p < previous.size(); ++p) {
    if (!used[p]) out.departed.push_back(previous[p].id);
  }
  std::sort(out.departed.begin(), out.departed.end());
  return out;
}

/// Convenience form over frame records; colors come from the attribute text.
inline TrackAssignment track(const std::vector<ObjectRecord>& previous, const std::vector<RegionMask>& regions,
                             int next_id, double gate = kTrackingGate) {
  std::vector<TrackedObject> prev;
  for (const ObjectRecord& r : previous) {
    prev.push_back({r.id, {r.spatial.x, r.spatial.y}, parse_appearance(r.attributes).color});
  }
  return track(prev, regions, next_id, gate);
}

}  // namespace cwm
