#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "cwm/core/types.hpp"

namespace cwm {

/// One run of set cells over the row-major grid: [start, start + length).
struct Run {
  std::int64_t start = 0;
  std::int64_t length = 0;

  friend bool operator==(const Run&, const Run&) = default;
};

/// Run-length encoded binary mask. Canonical form: runs ascending, maximal
/// (no two runs touch), every length positive. All builders here emit the
/// canonical form; `from_runs` keeps whatever it is given so the validator
/// can report malformed input.
class RleMask {
 public:
  RleMask() = default;

  static RleMask from_runs(std::vector<Run> runs) {
    RleMask mask;
    mask.runs_ = std::move(runs);
    return mask;
  }

  /// `cells` is row-major, non-zero means set.
  static RleMask from_cells(const std::vector<std::uint8_t>& cells) {
    RleMask mask;
    const auto n = static_cast<std::int64_t>(cells.size());
    std::int64_t i = 0;
    while (i < n) {
      if (!cells[static_cast<std::size_t>(i)]) {
        ++i;
        continue;
      }
      const std::int64_t start = i;
      while (i < n && cells[static_cast<std::size_t>(i)]) ++i;
      mask.runs_.push_back({start, i - start});
    }
    return mask;
  }

  /// Builds from an unsorted list of cell offsets (duplicates allowed).
  static RleMask from_offsets(std::vector<std::int64_t> offsets) {
    std::sort(offsets.begin(), offsets.end());
    offsets.erase(std::unique(offsets.begin(), offsets.end()), offsets.end());
    RleMask mask;
    for (std::int64_t offset : offsets) {
      if (!mask.runs_.empty() && mask.runs_.back().start + mask.runs_.back().length == offset) {
        ++mask.runs_.back().length;
      } else {
        mask.runs_.push_back({offset, 1});
      }
    }
    return mask;
  }

  const std::vector<Run>& runs() const { return runs_; }
  bool empty() const { return runs_.empty(); }

  std::int64_t area() const {
    std::int64_t total = 0;
    for (const Run& run : runs_) total += run.length;
    return total;
  }

  /// True when runs are ascending, maximal, positive and inside the grid.
  bool well_formed(GridSize grid) const {
    std::int64_t end = std::numeric_limits<std::int64_t>::min();
    for (const Run& run : runs_) {
      if (run.length <= 0 || run.start < 0) return false;
      if (run.start + run.length > grid.cells()) return false;
      if (end != std::numeric_limits<std::int64_t>::min() && run.start <= end) return false;
      end = run.start + run.length;
    }
    return true;
  }

  bool contains(std::int64_t offset) const {
    auto it = std::upper_bound(runs_.begin(), runs_.end(), offset,
                               [](std::int64_t value, const Run& run) { return value < run.start; });
    if (it == runs_.begin()) return false;
    --it;
    return offset < it->start + it->length;
  }

  template <class F>
  void for_each_cell(F&& visit) const {
    for (const Run& run : runs_) {
      for (std::int64_t offset = run.start; offset < run.start + run.length; ++offset) visit(offset);
    }
  }

  /// Mean cell index (x, y). Empty masks report (0, 0).
  Vec2 centroid(GridSize grid) const {
    double sx = 0.0;
    double sy = 0.0;
    std::int64_t count = 0;
    for_each_cell([&](std::int64_t offset) {
      sx += static_cast<double>(offset % grid.width);
      sy += static_cast<double>(offset / grid.width);
      ++count;
    });
    if (count == 0) return {};
    return {sx / static_cast<double>(count), sy / static_cast<double>(count)};
  }

  CellBox bbox(GridSize grid) const {
    if (runs_.empty()) return {};
    int x0 = std::numeric_limits<int>::max();
    int y0 = std::numeric_limits<int>::max();
    int x1 = std::numeric_limits<int>::min();
    int y1 = std::numeric_limits<int>::min();
    for (const Run& run : runs_) {
      const std::int64_t last = run.start + run.length - 1;
      const int ya = static_cast<int>(run.start / grid.width);
      const int yb = static_cast<int>(last / grid.width);
      y0 = std::min(y0, ya);
      y1 = std::max(y1, yb);
      if (ya != yb) {
        x0 = 0;
        x1 = grid.width - 1;
      } else {
        x0 = std::min(x0, static_cast<int>(run.start % grid.width));
        x1 = std::max(x1, static_cast<int>(last % grid.width));
      }
    }
    return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
  }

  RleMask united(const RleMask& other) const { return combine(other, [](bool a, bool b) { return a || b; }); }
  RleMask intersected(const RleMask& other) const { return combine(other, [](bool a, bool b) { return a && b; }); }
  RleMask subtracted(const RleMask& other) const { return combine(other, [](bool a, bool b) { return a && !b; }); }

  /// Shift by whole cells; cells leaving the grid are dropped.
  RleMask translated(int dx, int dy, GridSize grid) const {
    std::vector<std::int64_t> offsets;
    for_each_cell([&](std::int64_t offset) {
      const std::int64_t x = offset % grid.width + dx;
      const std::int64_t y = offset / grid.width + dy;
      if (x >= 0 && x < grid.width && y >= 0 && y < grid.height) offsets.push_back(y * grid.width + x);
    });
    return from_offsets(std::move(offsets));
  }

  friend bool operator==(const RleMask&, const RleMask&) = default;

 private:
  template <class Op>
  RleMask combine(const RleMask& other, Op op) const {
    // Sweep over run boundaries of both operands.
    std::vector<std::int64_t> cuts;
    cuts.reserve(2 * (runs_.size() + other.runs_.size()));
    for (const Run& r : runs_) {
      cuts.push_back(r.start);
      cuts.push_back(r.start + r.length);
    }
    for (const Run& r : other.runs_) {
      cuts.push_back(r.start);
      cuts.push_back(r.start + r.length);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    RleMask out;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const std::int64_t lo = cuts[i];
      const std::int64_t hi = cuts[i + 1];
      if (!op(contains(lo), other.contains(lo))) continue;
      if (!out.runs_.empty() && out.runs_.back().start + out.runs_.back().length == lo) {
        out.runs_.back().length += hi - lo;
      } else {
        out.runs_.push_back({lo, hi - lo});
      }
    }
    return out;
  }

  std::vector<Run> runs_;
};

/// Intersection over union; two empty masks agree perfectly (1.0).
inline double iou(const RleMask& a, const RleMask& b) {
  const std::int64_t inter = a.intersected(b).area();
  const std::int64_t uni = a.area() + b.area() - inter;
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace cwm
