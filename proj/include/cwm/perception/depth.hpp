#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "cwm/perception/segment.hpp"

namespace cwm {

/// What tracking history knows about a region's object.
struct DepthPrior {
  /// Largest visible area seen before this frame; 0 when unknown.
  double max_area = 0.0;
  double z = 0.0;
  /// Predicted unoccluded footprint box this frame, when history has one.
  std::optional<CellBox> expected;
  /// Predicted unoccluded cells; empty when unknown.
  RleMask footprint;
  /// Untracked region that appeared away from the frame border.
  bool emerging = false;
};

inline constexpr double kOcclusionRatio = 0.9;

/// Pairs of regions that touch (4-adjacent cells), as an adjacency matrix.
inline std::vector<std::vector<bool>> region_adjacency(const std::vector<RegionMask>& regions, GridSize grid) {
  const std::size_t n = regions.size();
  std::vector<int> label(static_cast<std::size_t>(grid.cells()), -1);
  for (std::size_t i = 0; i < n; ++i) {
    regions[i].mask.for_each_cell([&](std::int64_t c) { label[static_cast<std::size_t>(c)] = static_cast<int>(i); });
  }
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      const int a = label[static_cast<std::size_t>(y) * grid.width + x];
      if (a < 0) continue;
      if (x + 1 < grid.width) {
        const int b = label[static_cast<std::size_t>(y) * grid.width + x + 1];
        if (b >= 0 && b != a) adj[a][b] = adj[b][a] = true;
      }
      if (y + 1 < grid.height) {
        const int b = label[static_cast<std::size_t>(y + 1) * grid.width + x];
        if (b >= 0 && b != a) adj[a][b] = adj[b][a] = true;
      }
    }
  }
  return adj;
}

inline std::int64_t cells_in_box(const RleMask& mask, const CellBox& box, GridSize grid) {
  std::int64_t count = 0;
  mask.for_each_cell([&](std::int64_t c) {
    const auto x = static_cast<int>(c % grid.width);
    const auto y = static_cast<int>(c / grid.width);
    count += (x >= box.x0 && x < box.x0 + box.w && y >= box.y0 && y < box.y0 + box.h) ? 1 : 0;
  });
  return count;
}

/// Occlusion-only depth. A region is ranked one step behind the farthest
/// touching region that covers part of its predicted footprint. Without a
/// footprint, a region whose visible area dropped below 90% of its historical
/// maximum is ranked behind the touching regions that meet its expected box
/// (any touching region when no box is known). A region that appears inside
/// the frame is ranked behind every region it touches. When two regions claim
/// to be behind each other, the one whose footprint is more covered stays
/// behind. Rankings are relaxed until stable so stacks order front to back.
/// Every other region keeps its prior z.
inline std::vector<double> infer_depth_order(const std::vector<RegionMask>& regions,
                                             const std::vector<DepthPrior>& priors, GridSize grid) {
  const std::size_t n = regions.size();
  std::vector<DepthPrior> p(n);
  for (std::size_t i = 0; i < n && i < priors.size(); ++i) p[i] = priors[i];
  std::vector<double> z(n, 0.0);
  std::vector<std::vector<bool>> behind(n, std::vector<bool>(n, false));
  std::vector<std::vector<std::int64_t>> cover(n, std::vector<std::int64_t>(n, 0));
  const auto adj = region_adjacency(regions, grid);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = p[i].z;
    const bool shrunk = p[i].max_area > 0 && static_cast<double>(regions[i].area) < kOcclusionRatio * p[i].max_area;
    if (!shrunk && !p[i].emerging && p[i].footprint.empty()) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !adj[i][j]) continue;
      if (p[i].emerging || !p[i].expected) {
        behind[i][j] = true;
        cover[i][j] = regions[j].area;
        continue;
      }
      cover[i][j] = p[i].footprint.empty() ? cells_in_box(regions[j].mask, *p[i].expected, grid)
                                           : regions[j].mask.intersected(p[i].footprint).area();
      behind[i][j] = cover[i][j] > 0;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!behind[i][j] || !behind[j][i]) continue;
      bool i_back;
      if (p[i].emerging != p[j].emerging) {
        i_back = p[i].emerging;
      } else if (cover[i][j] != cover[j][i]) {
        i_back = cover[i][j] > cover[j][i];
      } else {
        i_back = p[i].z > p[j].z;
      }
      behind[i][j] = i_back;
      behind[j][i] = !i_back;
    }
  }
  for (std::size_t pass = 0; pass <= n; ++pass) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      double rank = z[i];
      for (std::size_t j = 0; j < n; ++j) {
        if (behind[i][j]) rank = std::max(rank, z[j] + 1.0);
      }
      changed = changed || rank != z[i];
      z[i] = rank;
    }
    if (!changed) break;
  }
  return z;
}

}  // namespace cwm
