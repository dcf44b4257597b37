#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cwm/core/error.hpp"
#include "cwm/core/hash.hpp"
#include "cwm/core/key_value.hpp"
#include "cwm/image/ppm.hpp"
#include "cwm/intervene/dsl.hpp"
#include "cwm/metrics/report.hpp"
#include "cwm/pipeline/run.hpp"
#include "cwm/twin/codec.hpp"

namespace cwm {

inline constexpr std::string_view kManifestVersion = "1";

/// Artifact directory: objects/<sha256> holds immutable blobs,
/// runs/<id>.manifest names a run's blobs, runs/index.txt is an append-only
/// log of "<id> <manifest sha256>" and "<id> deleted" lines.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_ / "objects");
    std::filesystem::create_directories(root_ / "runs");
    load_index();
  }

  const std::filesystem::path& root() const { return root_; }

  /// Stores `data` under its hash and returns the hash.
  std::string put(std::string_view data) {
    const std::string hash = sha256_hex(data);
    const auto path = object_path(hash);
    if (!std::filesystem::exists(path)) write_atomically(path, data);
    return hash;
  }

  std::string get(const std::string& hash) const {
    const auto path = object_path(hash);
    if (hash.size() != 64 || !std::filesystem::exists(path)) throw Error(Errc::kNotFound, "no object " + hash);
    const std::string data = read_text_file(path.string());
    if (sha256_hex(data) != hash) throw Error(Errc::kInvariant, "object " + hash + " is corrupt");
    return data;
  }

  /// Reserves the next run id ("run-000001", ...).
  std::string allocate_id() {
    std::lock_guard lock(mutex_);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "run-%06d", ++last_number_);
    return buf;
  }

  /// Persists a finished run under `result.run_id` (allocated if empty).
  std::string save(RunResult& result) {
    if (result.run_id.empty()) result.run_id = allocate_id();
    nlohmann::ordered_json manifest;
    manifest["manifest_version"] = std::string(kManifestVersion);
    manifest["run_id"] = result.run_id;
    manifest["run"] = put(serialize_run(result));
    manifest["factual_video"] = put(encode_ppm_stream(result.factual_video.frames));
    manifest["edited_first_frames"] = nlohmann::ordered_json::array();
    for (const Frame& f : result.edited_first_frames) manifest["edited_first_frames"].push_back(put(encode_ppm(f)));
    manifest["videos"] = nlohmann::ordered_json::array();
    for (const Video& v : result.videos) manifest["videos"].push_back(put(encode_ppm_stream(v.frames)));
    manifest["timings"] = result.timings;
    const std::string text = manifest.dump();
    write_atomically(root_ / "runs" / (result.run_id + ".manifest"), text);
    std::lock_guard lock(mutex_);
    append_index(result.run_id + " " + sha256_hex(text));
    live_[result.run_id] = true;
    return result.run_id;
  }

  bool contains(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = live_.find(id);
    return it != live_.end() && it->second;
  }

  std::vector<std::string> run_ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, alive] : live_) {
      if (alive) out.push_back(id);
    }
    return out;
  }

  /// Drops the run from the index; shared objects stay.
  void remove(const std::string& id) {
    std::lock_guard lock(mutex_);
    auto it = live_.find(id);
    if (it == live_.end() || !it->second) throw Error(Errc::kNotFound, "no run " + id);
    append_index(id + " deleted");
    it->second = false;
    std::filesystem::remove(root_ / "runs" / (id + ".manifest"));
  }

  RunResult load(const std::string& id) const {
    if (!contains(id)) throw Error(Errc::kNotFound, "no run " + id);
    const nlohmann::json manifest = codec::parse_json(read_text_file((root_ / "runs" / (id + ".manifest")).string()));
    try {
      const nlohmann::json doc = codec::parse_json(get(manifest.at("run").get<std::string>()));
      RunResult r;
      r.run_id = manifest.at("run_id").get<std::string>();
      r.timings = manifest.at("timings").get<std::map<std::string, double>>();
      r.input_kind = doc.at("input").at("kind").get<std::string>();
      r.input_text = doc.at("input").at("text").get<std::string>();
      r.intervention_text = doc.at("intervention").get<std::string>();
      r.config_snapshot = doc.at("config").get<std::string>();
      r.factual_video = load_video(doc.at("factual_video"), manifest.at("factual_video").get<std::string>());
      r.factual_twin = twin_from_json(doc.at("factual_twin"));
      const Intervention intervention = read_intervention(r.intervention_text);
      const auto& samples = doc.at("samples");
      for (std::size_t n = 0; n < samples.size(); ++n) {
        const auto& s = samples[n];
        CounterfactualTwin cf;
        cf.sample = s.at("sample").get<int>();
        cf.provenance = s.at("provenance").get<std::string>();
        cf.intervention = intervention;
        cf.twin = twin_from_json(s.at("twin"));
        for (const auto& path : s.at("trajectories")) {
          std::vector<Vec2>& points = cf.trajectories[path.at("id").get<int>()];
          for (const auto& p : path.at("points")) points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        }
        r.counterfactuals.push_back(std::move(cf));
        if (s.contains("edited_first_frame")) {
          r.edited_first_frames.push_back(decode_ppm(get(manifest.at("edited_first_frames").at(n).get<std::string>())));
        }
        if (s.contains("consistency")) r.consistency.push_back(s.at("consistency").get<double>());
        if (s.contains("video")) {
          r.videos.push_back(load_video(s.at("video"), manifest.at("videos").at(n).get<std::string>()));
        }
        if (s.contains("report")) r.reports.push_back(report_from_json(s.at("report")));
      }
      r.warnings = doc.at("warnings").get<std::vector<std::string>>();
      return r;
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("/" + id, std::string("bad run manifest: ") + e.what());
    }
  }

  /// The canonical run document as stored.
  std::string load_document(const std::string& id) const {
    if (!contains(id)) throw Error(Errc::kNotFound, "no run " + id);
    const nlohmann::json manifest = codec::parse_json(read_text_file((root_ / "runs" / (id + ".manifest")).string()));
    return get(manifest.at("run").get<std::string>());
  }

 private:
  std::filesystem::path object_path(const std::string& hash) const { return root_ / "objects" / hash; }

  Video load_video(const nlohmann::json& ref, const std::string& hash) const {
    Video v;
    v.first_frame = ref.at("first_frame").get<int>();
    v.fps = ref.at("fps").get<double>();
    if (ref.at("sha256").get<std::string>() != hash) throw Error(Errc::kInvariant, "video hash mismatch");
    v.frames = decode_ppm_stream(get(hash));
    return v;
  }

  static void write_atomically(const std::filesystem::path& path, std::string_view data) {
    static std::atomic<unsigned> counter{0};
    const auto tmp = path.string() + ".tmp" + std::to_string(++counter);
    write_text_file(tmp, data);
    std::filesystem::rename(tmp, path);
  }

  void append_index(const std::string& line) {
    std::ofstream out(root_ / "runs" / "index.txt", std::ios::app | std::ios::binary);
    out << line << '\n';
    if (!out.flush()) throw Error(Errc::kIo, "cannot append to the run index");
  }

  void load_index() {
    const auto path = root_ / "runs" / "index.txt";
    if (!std::filesystem::exists(path)) return;
    std::istringstream in(read_text_file(path.string()));
    std::string id;
    std::string value;
    while (in >> id >> value) {
      live_[id] = value != "deleted";
      if (id.rfind("run-", 0) == 0) {
        last_number_ = std::max(last_number_, parse_number<int>("run id", id.substr(4)));
      }
    }
  }

  std::filesystem::path root_;
  mutable std::mutex mutex_;
  std::map<std::string, bool> live_;
  int last_number_ = 0;
};

}  // namespace cwm
