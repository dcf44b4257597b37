#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "cwm/core/error.hpp"
#include "cwm/image/appearance.hpp"
#include "cwm/image/frame.hpp"
#include "cwm/image/raster.hpp"
#include "cwm/intervene/intervention.hpp"
#include "cwm/intervene/propagate.hpp"
#include "cwm/perception/segment.hpp"
#include "cwm/sim/world.hpp"
#include "cwm/twin/twin.hpp"

namespace cwm {

/// Cells/frame between observed and requested motion.
inline constexpr double kVelocityTolerance = 0.5;
/// Cells of centroid displacement allowed while frozen.
inline constexpr double kFreezeTolerance = 0.5;

namespace detail {

inline std::optional<RegionMask> region_of(const std::vector<RegionMask>& regions, Rgb color) {
  for (const RegionMask& r : regions) {
    if (r.color == color) return r;
  }
  return std::nullopt;
}

/// Shape whose footprint over the region's bounding box equals the region, or
/// nullopt when the region is partly hidden.
inline std::optional<Shape> unoccluded_shape(const RegionMask& region, GridSize grid) {
  const double x = region.bbox.x0 + (region.bbox.w - 1) / 2.0;
  const double y = region.bbox.y0 + (region.bbox.h - 1) / 2.0;
  for (Shape shape : {Shape::kRectangle, Shape::kCircle}) {
    if (rasterize(shape, x, y, region.bbox.w, region.bbox.h, grid) == region.mask) return shape;
  }
  return std::nullopt;
}

struct Tally {
  int passed = 0;
  int total = 0;
  void check(bool ok) {
    ++total;
    passed += ok ? 1 : 0;
  }
  double score(double vacuous) const { return total == 0 ? vacuous : static_cast<double>(passed) / total; }
};

}  // namespace detail

/// Rule-based check that the video shows the intervention's intent.
/// Observations are the per-color regions of each frame; the target is
/// identified by its factual color. Score = fraction of postconditions met.
inline double intervention_success(const TwinSequence& factual, const Video& video, const Intervention& intervention,
                                   Rgb background = {}) {
  if (intervention.kind == InterventionKind::kNatural) {
    throw Error(Errc::kUnsupportedIntervention, "success is only defined for DSL interventions");
  }
  if (intervention.kind == InterventionKind::kNull) return 1.0;
  const ObjectTrace* target = factual.find(intervention.target_id);
  const int t = intervention.at_frame;
  if (!target || !target->at(t)) {
    throw Error(Errc::kUnknownId, "no factual object " + std::to_string(intervention.target_id) + " at frame " +
                                      std::to_string(t));
  }
  const Rgb old_color = require_color(target->attributes);
  const ElementRecord& at = *target->at(t);
  const ElementRecord& amodal = detail::max_area_record(*target);
  const int w = std::max(1, static_cast<int>(std::lround(amodal.spatial.w)));
  const int h = std::max(1, static_cast<int>(std::lround(amodal.spatial.h)));
  const Shape old_shape = require_shape(target->category);
  const FrameRange presence = target->presence();

  auto regions_at = [&](int tau) {
    const Frame& f = video.at_index(tau);
    return merge_by_color(segment(f, background), {f.width, f.height});
  };
  const int first = std::max(t, video.first_frame);
  const int last = video.last_frame();
  detail::Tally tally;

  switch (intervention.kind) {
    case InterventionKind::kRemove: {
      for (int tau = first; tau <= std::min(last, presence.last); ++tau) {
        tally.check(!detail::region_of(regions_at(tau), old_color));
      }
      return tally.score(1.0);
    }
    case InterventionKind::kReplace:
    case InterventionKind::kSetAttribute: {
      std::optional<Rgb> new_color = intervention.color;
      std::optional<Shape> new_shape = intervention.shape;
      if (intervention.kind == InterventionKind::kSetAttribute) {
        const Appearance a = parse_appearance(intervention.attribute_text);
        new_color = a.color;
        new_shape = a.shape;
      }
      const bool recolored = new_color && *new_color != old_color;
      const Rgb shown = recolored ? *new_color : old_color;
      if (t >= video.first_frame && t <= last) {
        const auto found = detail::region_of(regions_at(t), shown);
        tally.check(found && std::abs(found->centroid.x - at.spatial.x) <= w / 2.0 + 0.5 &&
                    std::abs(found->centroid.y - at.spatial.y) <= h / 2.0 + 0.5);
      }
      const std::optional<std::pair<int, int>> new_size = intervention.kind == InterventionKind::kReplace
                                                              ? intervention.size
                                                              : parse_appearance(intervention.attribute_text).size;
      if ((new_shape && *new_shape != old_shape) || new_size) {
        // Shape and size are read off the first frame showing the whole footprint.
        bool judged = false;
        for (int tau = first; tau <= last && !judged; ++tau) {
          const auto found = detail::region_of(regions_at(tau), shown);
          if (!found) continue;
          const std::optional<Shape> seen = detail::unoccluded_shape(*found, factual.grid);
          if (!seen) continue;
          judged = true;
          bool ok = !new_shape || *seen == *new_shape;
          if (new_size) ok = ok && found->bbox.w == new_size->first && found->bbox.h == new_size->second;
          tally.check(ok);
        }
        if (!judged) tally.check(false);
      }
      if (recolored) {
        for (int tau = first; tau <= std::min(last, presence.last); ++tau) {
          tally.check(!detail::region_of(regions_at(tau), old_color));
        }
      }
      return tally.score(0.0);
    }
    case InterventionKind::kSetMotion: {
      // Predicted footprints come from the requested velocity folded from the
      // factual state at t; observed velocity is measured between
      // consecutive frames where the target is fully visible.
      SimObject o;
      o.shape = old_shape;
      o.w = w;
      o.h = h;
      o.position = {at.spatial.x, at.spatial.y};
      o.velocity = *intervention.velocity;
      const GridSize grid = factual.grid;
      struct Seen {
        int frame;
        Vec2 observed;
        Vec2 predicted;
      };
      std::optional<Seen> prev;
      for (int tau = t; tau <= last; ++tau) {
        if (tau > t) o = step_object(o, grid.width, grid.height);
        if (tau < video.first_frame) continue;
        const RleMask footprint = rasterize(o.shape, o.position.x, o.position.y, w, h, grid);
        const auto found = detail::region_of(regions_at(tau), old_color);
        if (!found || found->area != footprint.area()) continue;
        const Seen now{tau, found->centroid, footprint.centroid(grid)};
        if (prev) {
          const double gap = now.frame - prev->frame;
          const double ex = (now.observed.x - prev->observed.x - now.predicted.x + prev->predicted.x) / gap;
          const double ey = (now.observed.y - prev->observed.y - now.predicted.y + prev->predicted.y) / gap;
          tally.check(std::abs(ex) <= kVelocityTolerance && std::abs(ey) <= kVelocityTolerance);
        }
        prev = now;
      }
      return tally.score(0.0);
    }
    case InterventionKind::kFreeze: {
      const int end = intervention.freeze_frames ? std::min(last, t + *intervention.freeze_frames) : last;
      const auto full = rasterize(old_shape, at.spatial.x, at.spatial.y, w, h, factual.grid).area();
      std::optional<Vec2> anchor;
      for (int tau = first; tau <= end; ++tau) {
        const auto found = detail::region_of(regions_at(tau), old_color);
        if (!found || found->area != full) continue;
        if (!anchor) {
          anchor = found->centroid;
          continue;
        }
        tally.check(std::hypot(found->centroid.x - anchor->x, found->centroid.y - anchor->y) <= kFreezeTolerance);
      }
      return tally.score(anchor ? 1.0 : 0.0);
    }
    default:
      return 1.0;
  }
}

}  // namespace cwm
