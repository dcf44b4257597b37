#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cwm/core/error.hpp"
#include "cwm/image/frame.hpp"

namespace cwm {

inline constexpr double kPsnrCap = 99.0;
inline constexpr int kSsimWindow = 8;

/// 10 log10(255^2 / MSE) over every channel byte; identical frames give the cap.
inline double psnr(const Frame& a, const Frame& b) {
  require_same_dimensions(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]);
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(a.pixels.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

/// BT.601 luma per pixel.
inline std::vector<double> luma(const Frame& f) {
  std::vector<double> out(static_cast<std::size_t>(f.width) * f.height);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (299.0 * f.pixels[3 * i] + 587.0 * f.pixels[3 * i + 1] + 114.0 * f.pixels[3 * i + 2]) / 1000.0;
  }
  return out;
}

/// Mean SSIM over non-overlapping 8x8 luma windows (partial edge windows are
/// skipped), K1 = 0.01, K2 = 0.03, L = 255, population statistics.
inline double ssim(const Frame& a, const Frame& b) {
  require_same_dimensions(a, b);
  if (a.width < kSsimWindow || a.height < kSsimWindow) {
    throw Error(Errc::kTooSmall, "ssim needs frames of at least 8x8");
  }
  constexpr double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  constexpr double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  const std::vector<double> ya = luma(a);
  const std::vector<double> yb = luma(b);
  constexpr double n = kSsimWindow * kSsimWindow;
  double total = 0.0;
  int windows = 0;
  for (int wy = 0; wy + kSsimWindow <= a.height; wy += kSsimWindow) {
    for (int wx = 0; wx + kSsimWindow <= a.width; wx += kSsimWindow) {
      double ma = 0.0, mb = 0.0;
      for (int y = wy; y < wy + kSsimWindow; ++y) {
        for (int x = wx; x < wx + kSsimWindow; ++x) {
          ma += ya[static_cast<std::size_t>(y) * a.width + x];
          mb += yb[static_cast<std::size_t>(y) * a.width + x];
        }
      }
      ma /= n;
      mb /= n;
      double va = 0.0, vb = 0.0, cov = 0.0;
      for (int y = wy; y < wy + kSsimWindow; ++y) {
        for (int x = wx; x < wx + kSsimWindow; ++x) {
          const double da = ya[static_cast<std::size_t>(y) * a.width + x] - ma;
          const double db = yb[static_cast<std::size_t>(y) * a.width + x] - mb;
          va += da * da;
          vb += db * db;
          cov += da * db;
        }
      }
      va /= n;
      vb /= n;
      cov /= n;
      total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++windows;
    }
  }
  return total / windows;
}

}  // namespace cwm
