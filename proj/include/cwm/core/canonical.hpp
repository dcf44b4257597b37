#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

#include "cwm/core/error.hpp"

namespace cwm {

/// Renders `value` with exactly four fractional digits, rounding the exact
/// binary value half-to-even. Negative zero prints as "0.0000".
inline std::string format_fixed4(double value) {
  if (!std::isfinite(value)) {
    throw Error(Errc::kInvariant, "non-finite value cannot be rendered canonically");
  }
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed, 4);
  if (ec != std::errc{}) {
    throw Error(Errc::kInvariant, "value out of canonical range");
  }
  std::string out(buf, end);
  if (out == "-0.0000") out = "0.0000";
  return out;
}

/// Round-trips `value` through its canonical text, so that values held in
/// memory are exactly what the codec would read back.
inline double quantize(double value) {
  if (!std::isfinite(value)) return value;
  const std::string text = format_fixed4(value);
  double out = 0.0;
  std::from_chars(text.data(), text.data() + text.size(), out);
  return out;
}

/// Shortest text that reads back to the same double (used for run manifests).
inline std::string format_exact(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw Error(Errc::kInvariant, "unformattable double");
  return std::string(buf, end);
}

}  // namespace cwm
