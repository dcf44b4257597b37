#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cwm/core/error.hpp"
#include "cwm/core/canonical.hpp"
#include "cwm/core/key_value.hpp"
#include "cwm/image/frame.hpp"

namespace cwm {

/// Binary PPM (P6, maxval 255).
inline std::string encode_ppm(const Frame& frame) {
  std::string out = "P6\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(frame.pixels.data()), frame.pixels.size());
  return out;
}

namespace detail {

inline void skip_ppm_space(std::string_view data, std::size_t& pos) {
  while (pos < data.size()) {
    if (data[pos] == '#') {
      while (pos < data.size() && data[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
      ++pos;
    } else {
      break;
    }
  }
}

inline int read_ppm_int(std::string_view data, std::size_t& pos) {
  skip_ppm_space(data, pos);
  if (pos >= data.size() || !std::isdigit(static_cast<unsigned char>(data[pos]))) {
    throw Error(Errc::kSyntax, "malformed PPM header at byte " + std::to_string(pos));
  }
  long value = 0;
  while (pos < data.size() && std::isdigit(static_cast<unsigned char>(data[pos]))) {
    value = value * 10 + (data[pos] - '0');
    if (value > 1'000'000) throw Error(Errc::kSyntax, "PPM dimension too large");
    ++pos;
  }
  return static_cast<int>(value);
}

}  // namespace detail

/// Decodes one P6 image starting at `pos`; advances `pos` past it.
inline Frame decode_ppm(std::string_view data, std::size_t& pos) {
  detail::skip_ppm_space(data, pos);
  if (data.substr(pos, 2) != "P6") throw Error(Errc::kSyntax, "not a P6 image at byte " + std::to_string(pos));
  pos += 2;
  const int width = detail::read_ppm_int(data, pos);
  const int height = detail::read_ppm_int(data, pos);
  const int maxval = detail::read_ppm_int(data, pos);
  if (maxval != 255) throw Error(Errc::kSyntax, "only 8-bit PPM is supported");
  if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos]))) {
    throw Error(Errc::kSyntax, "missing PPM header terminator");
  }
  ++pos;
  const std::size_t bytes = static_cast<std::size_t>(width) * height * 3;
  if (width <= 0 || height <= 0 || data.size() - pos < bytes) throw Error(Errc::kSyntax, "truncated PPM raster");
  Frame frame;
  frame.width = width;
  frame.height = height;
  frame.pixels.assign(reinterpret_cast<const std::uint8_t*>(data.data() + pos),
                      reinterpret_cast<const std::uint8_t*>(data.data() + pos + bytes));
  pos += bytes;
  return frame;
}

inline Frame decode_ppm(std::string_view data) {
  std::size_t pos = 0;
  return decode_ppm(data, pos);
}

/// Concatenated P6 images.
inline std::vector<Frame> decode_ppm_stream(std::string_view data) {
  std::vector<Frame> frames;
  std::size_t pos = 0;
  for (;;) {
    detail::skip_ppm_space(data, pos);
    if (pos >= data.size()) break;
    frames.push_back(decode_ppm(data, pos));
  }
  return frames;
}

inline std::string encode_ppm_stream(const std::vector<Frame>& frames) {
  std::string out;
  for (const Frame& f : frames) out += encode_ppm(f);
  return out;
}

inline std::string frame_file_name(int frame_index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04d.ppm", frame_index);
  return buf;
}

/// Writes numbered frames plus `manifest.txt` (frame count, fps, size, twin hash).
inline void write_video_dir(const std::filesystem::path& dir, const Video& video, std::string_view twin_hash = "") {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < video.frames.size(); ++i) {
    write_text_file((dir / frame_file_name(video.first_frame + static_cast<int>(i))).string(),
                    encode_ppm(video.frames[i]));
  }
  const Frame* first = video.frames.empty() ? nullptr : &video.frames.front();
  write_text_file((dir / "manifest.txt").string(),
                  format_key_values({{"video_version", "1"},
                                     {"frames", std::to_string(video.frames.size())},
                                     {"first_frame", std::to_string(video.first_frame)},
                                     {"fps", format_exact(video.fps)},
                                     {"width", std::to_string(first ? first->width : 0)},
                                     {"height", std::to_string(first ? first->height : 0)},
                                     {"twin_hash", std::string(twin_hash)}}));
}

/// Reads a frame directory (numbered *.ppm, optional manifest) or a single
/// concatenated PPM file.
inline Video read_video(const std::filesystem::path& path) {
  Video video;
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".ppm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) video.frames.push_back(decode_ppm(read_text_file(file.string())));
    const auto manifest = path / "manifest.txt";
    if (std::filesystem::exists(manifest)) {
      const KeyValues kv = parse_key_values(read_text_file(manifest.string()));
      if (auto it = kv.find("first_frame"); it != kv.end()) video.first_frame = parse_number<int>("first_frame", it->second);
      if (auto it = kv.find("fps"); it != kv.end()) video.fps = parse_number<double>("fps", it->second);
    }
  } else {
    video.frames = decode_ppm_stream(read_text_file(path.string()));
  }
  if (video.frames.empty()) throw Error(Errc::kIo, "no frames found at " + path.string());
  return video;
}

}  // namespace cwm
