#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cwm/core/error.hpp"
#include "cwm/core/types.hpp"

namespace cwm {

/// Row-major 8-bit RGB raster.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Frame() = default;
  Frame(int w, int h, Rgb fill = {}) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3) {
    for (std::size_t i = 0; i < pixels.size(); i += 3) {
      pixels[i] = fill.r;
      pixels[i + 1] = fill.g;
      pixels[i + 2] = fill.b;
    }
  }

  bool valid() const {
    return width > 0 && height > 0 && pixels.size() == static_cast<std::size_t>(width) * height * 3;
  }

  Rgb at(int x, int y) const {
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
  }

  void set(int x, int y, Rgb c) {
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    pixels[i] = c.r;
    pixels[i + 1] = c.g;
    pixels[i + 2] = c.b;
  }

  friend bool operator==(const Frame&, const Frame&) = default;
};

/// Ordered frames; `first_frame` is the scene frame index of frames[0].
struct Video {
  int first_frame = 0;
  double fps = 24.0;
  std::vector<Frame> frames;

  int last_frame() const { return first_frame + static_cast<int>(frames.size()) - 1; }
  const Frame& at_index(int frame_index) const {
    return frames.at(static_cast<std::size_t>(frame_index - first_frame));
  }
  friend bool operator==(const Video&, const Video&) = default;
};

inline void require_same_dimensions(const Frame& a, const Frame& b) {
  if (a.width != b.width || a.height != b.height || !a.valid() || !b.valid()) {
    throw Error(Errc::kDimensionMismatch, "frames differ in size: " + std::to_string(a.width) + "x" +
                                              std::to_string(a.height) + " vs " + std::to_string(b.width) +
                                              "x" + std::to_string(b.height));
  }
}

}  // namespace cwm
