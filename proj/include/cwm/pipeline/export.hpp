#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "cwm/core/hash.hpp"
#include "cwm/core/key_value.hpp"
#include "cwm/image/ppm.hpp"
#include "cwm/metrics/report.hpp"
#include "cwm/pipeline/run.hpp"
#include "cwm/twin/codec.hpp"

namespace cwm {

/// Writes a run as plain files under `dir`:
///   run.json, factual.twin.json, factual/ (frames + manifest.txt),
///   sample-<n>.twin.json, sample-<n>/, sample-<n>.first_frame.ppm,
///   sample-<n>.report.txt, sample-<n>.report.csv,
/// and manifest.txt listing each file's SHA-256.
inline void export_run(const RunResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::pair<std::string, std::string>> files;
  auto write = [&](const std::string& name, const std::string& data) {
    write_text_file((dir / name).string(), data);
    files.emplace_back("file." + name, sha256_hex(data));
  };
  write("run.json", serialize_run(r));
  const std::string factual_twin = serialize_twin(r.factual_twin);
  write("factual.twin.json", factual_twin);
  write_video_dir(dir / "factual", r.factual_video, sha256_hex(factual_twin));
  files.emplace_back("video.factual", sha256_hex(encode_ppm_stream(r.factual_video.frames)));
  for (std::size_t n = 0; n < r.counterfactuals.size(); ++n) {
    const std::string stem = "sample-" + std::to_string(n);
    const std::string twin = serialize_twin(r.counterfactuals[n].twin);
    write(stem + ".twin.json", twin);
    if (n < r.edited_first_frames.size()) write(stem + ".first_frame.ppm", encode_ppm(r.edited_first_frames[n]));
    if (n < r.videos.size()) {
      write_video_dir(dir / stem, r.videos[n], sha256_hex(twin));
      files.emplace_back("video." + stem, sha256_hex(encode_ppm_stream(r.videos[n].frames)));
    }
    if (n < r.reports.size()) {
      write(stem + ".report.txt", report_text(r.reports[n]));
      write(stem + ".report.csv", report_csv(r.reports[n]));
    }
  }
  std::vector<std::pair<std::string, std::string>> manifest{
      {"manifest_version", "1"},
      {"run_id", r.run_id},
      {"intervention", r.intervention_text},
      {"samples", std::to_string(r.counterfactuals.size())},
  };
  manifest.insert(manifest.end(), files.begin(), files.end());
  write_text_file((dir / "manifest.txt").string(), format_key_values(manifest));
}

}  // namespace cwm
