#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "cwm/core/error.hpp"
#include "cwm/core/hash.hpp"
#include "cwm/image/ppm.hpp"
#include "cwm/intervene/dsl.hpp"
#include "cwm/metrics/report.hpp"
#include "cwm/pipeline/config.hpp"
#include "cwm/pipeline/run.hpp"
#include "cwm/pipeline/store.hpp"
#include "cwm/sim/scenario.hpp"
#include "cwm/twin/codec.hpp"

namespace cwm {

inline constexpr int kMaxServiceRuns = 64;

/// HTTP front end over run_counterfactual and a SessionStore. Runs execute on
/// worker threads, at most `max_runs` at a time; each run owns its state and
/// only touches the store through append-only writes.
class Service {
 public:
  Service(ServiceConfig config, RunConfig defaults)
      : config_(std::move(config)), defaults_(std::move(defaults)), store_(config_.store),
        slots_(std::clamp(config_.max_runs, 1, kMaxServiceRuns)) {
    routes();
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  ~Service() { stop(); }

  /// Binds and starts serving in the background; port 0 picks a free port.
  /// Returns the bound port.
  int start() {
    int port = config_.port;
    if (port == 0) {
      port = server_.bind_to_any_port(config_.host);
      if (port < 0) port = 0;
    } else if (!server_.bind_to_port(config_.host, port)) {
      port = 0;
    }
    if (port <= 0) throw Error(Errc::kBind, "cannot bind " + config_.host + ":" + std::to_string(config_.port));
    port_ = port;
    listener_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port;
  }

  /// Blocks until the server stops (used by the `serve` command).
  void wait() {
    if (listener_.joinable()) listener_.join();
  }

  void stop() {
    server_.stop();
    if (listener_.joinable()) listener_.join();
    std::vector<std::thread> workers;
    {
      std::lock_guard lock(mutex_);
      workers.swap(workers_);
    }
    for (auto& w : workers) w.join();
  }

  int port() const { return port_; }
  SessionStore& store() { return store_; }

 private:
  enum class Status { kQueued, kRunning, kDone, kFailed };

  struct RunEntry {
    Status status = Status::kQueued;
    std::string stage;
    nlohmann::ordered_json error;
    std::shared_ptr<const RunResult> result;
  };

  static std::string_view status_name(Status s) {
    switch (s) {
      case Status::kQueued: return "queued";
      case Status::kRunning: return "running";
      case Status::kDone: return "done";
      case Status::kFailed: return "failed";
    }
    return "unknown";
  }

  static void reply(httplib::Response& res, int status, const nlohmann::ordered_json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void fail(httplib::Response& res, int status, std::string_view code, const std::string& message) {
    reply(res, status, {{"error", {{"code", code}, {"message", message}}}});
  }

  void routes() {
    server_.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      if (config_.token.empty() || req.get_header_value("Authorization") == "Bearer " + config_.token) {
        return httplib::Server::HandlerResponse::Unhandled;
      }
      fail(res, 401, "UNAUTHORIZED", "missing or wrong bearer token");
      return httplib::Server::HandlerResponse::Handled;
    });
    server_.Post("/scenarios", [this](const httplib::Request& req, httplib::Response& res) { post_scenario(req, res); });
    server_.Post("/videos", [this](const httplib::Request& req, httplib::Response& res) { post_video(req, res); });
    server_.Post("/runs", [this](const httplib::Request& req, httplib::Response& res) { post_run(req, res); });
    server_.Get(R"(/runs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) { get_run(req, res); });
    server_.Delete(R"(/runs/([^/]+))",
                   [this](const httplib::Request& req, httplib::Response& res) { delete_run(req, res); });
    server_.Get(R"(/runs/([^/]+)/twins/([^/]+))",
                [this](const httplib::Request& req, httplib::Response& res) { get_twin(req, res); });
    server_.Get(R"(/runs/([^/]+)/videos/([^/]+)/frames/(-?\d+))",
                [this](const httplib::Request& req, httplib::Response& res) { get_frame(req, res); });
    server_.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        fail(res, 500, "INTERNAL", e.what());
      } catch (...) {
        fail(res, 500, "INTERNAL", "unknown failure");
      }
    });
  }

  void post_scenario(const httplib::Request& req, httplib::Response& res) {
    std::string text = req.body;
    try {
      if (!trim(text).empty() && trim(text).front() == '{') {
        const Json doc = codec::parse_json(text);
        codec::require_keys(doc, "", {"spec"}, {});
        text = codec::get_string(doc["spec"], "/spec");
      }
      const ScenarioSpec spec = scenario_from_key_values(parse_key_values(text));
      const std::string canonical = scenario_to_text(spec);
      const std::string id = "scn-" + sha256_hex(canonical).substr(0, 16);
      {
        std::lock_guard lock(mutex_);
        scenarios_[id] = spec;
      }
      store_.put(canonical);
      reply(res, 201, {{"scenario_id", id}, {"spec", canonical}});
    } catch (const Error& e) {
      fail(res, 400, e.name(), e.what());
    }
  }

  void post_video(const httplib::Request& req, httplib::Response& res) {
    try {
      Video video;
      video.frames = decode_ppm_stream(req.body);
      if (video.frames.empty()) throw Error(Errc::kIo, "no frames in upload");
      for (const Frame& f : video.frames) require_same_dimensions(video.frames.front(), f);
      const std::string id = "vid-" + store_.put(req.body).substr(0, 16);
      {
        std::lock_guard lock(mutex_);
        videos_[id] = video;
      }
      reply(res, 201, {{"video_id", id}, {"frames", video.frames.size()}});
    } catch (const Error& e) {
      fail(res, 400, e.name(), e.what());
    }
  }

  void post_run(const httplib::Request& req, httplib::Response& res) {
    RunInput input;
    std::string intervention;
    RunConfig config = defaults_;
    try {
      const Json doc = codec::parse_json(req.body);
      codec::require_keys(doc, "", {"intervention"}, {"scenario_id", "video_id", "backend", "config"});
      intervention = codec::get_string(doc["intervention"], "/intervention");
      if (trim(intervention).empty()) throw SchemaError("/intervention", "empty intervention");
      read_intervention(intervention);
      if (doc.contains("scenario_id") == doc.contains("video_id")) {
        throw SchemaError("/", "exactly one of scenario_id and video_id is required");
      }
      KeyValues overrides;
      if (doc.contains("config")) {
        if (!doc["config"].is_object()) throw SchemaError("/config", "expected an object");
        for (const auto& [key, value] : doc["config"].items()) {
          if (std::find(run_config_keys().begin(), run_config_keys().end(), key) == run_config_keys().end()) {
            throw SchemaError("/config/" + key, "unknown config key");
          }
          if (value.is_string()) overrides[key] = value.get<std::string>();
          else if (value.is_number()) overrides[key] = value.dump();
          else throw SchemaError("/config/" + key, "expected a string or number");
        }
      }
      if (doc.contains("backend")) {
        const std::string backend = codec::get_string(doc["backend"], "/backend");
        if (backend != "deterministic" && backend != "llm") throw SchemaError("/backend", "expected deterministic or llm");
        overrides["intervene.backend"] = backend;
      }
      apply_run_config(config, overrides);
      require_valid(config);
      std::lock_guard lock(mutex_);
      if (doc.contains("scenario_id")) {
        const std::string id = codec::get_string(doc["scenario_id"], "/scenario_id");
        auto it = scenarios_.find(id);
        if (it == scenarios_.end()) return fail(res, 404, "UNKNOWN_SCENARIO", "no scenario " + id);
        input = it->second;
      } else {
        const std::string id = codec::get_string(doc["video_id"], "/video_id");
        auto it = videos_.find(id);
        if (it == videos_.end()) return fail(res, 404, "UNKNOWN_VIDEO", "no video " + id);
        input = it->second;
      }
    } catch (const ParseError& e) {
      return reply(res, 400, {{"error", {{"code", e.name()}, {"message", e.what()}, {"offset", e.offset()}}}});
    } catch (const Error& e) {
      return fail(res, 400, e.name(), e.what());
    }

    const std::string id = store_.allocate_id();
    {
      std::lock_guard lock(mutex_);
      runs_[id] = RunEntry{};
      workers_.emplace_back([this, id, input = std::move(input), intervention, config] {
        execute(id, input, intervention, config);
      });
    }
    reply(res, 202, {{"run_id", id}, {"status", "queued"}, {"links", {{"self", "/runs/" + id}}}});
  }

  void execute(const std::string& id, const RunInput& input, const std::string& intervention, const RunConfig& config) {
    slots_.acquire();
    update(id, [](RunEntry& e) { e.status = Status::kRunning; });
    try {
      RunResult result = run_counterfactual(input, intervention, config, [&](const std::string& stage) {
        update(id, [&](RunEntry& e) { e.stage = stage; });
      });
      result.run_id = id;
      store_.save(result);
      auto shared = std::make_shared<const RunResult>(std::move(result));
      update(id, [&](RunEntry& e) {
        e.status = Status::kDone;
        e.result = shared;
      });
    } catch (const StageError& e) {
      update(id, [&](RunEntry& entry) {
        entry.status = Status::kFailed;
        entry.error = {{"stage", e.stage()}, {"code", e.name()}, {"message", e.detail()}};
      });
    } catch (const std::exception& e) {
      update(id, [&](RunEntry& entry) {
        entry.status = Status::kFailed;
        entry.error = {{"stage", entry.stage}, {"code", "INTERNAL"}, {"message", e.what()}};
      });
    }
    slots_.release();
  }

  template <class F>
  void update(const std::string& id, F&& change) {
    std::lock_guard lock(mutex_);
    change(runs_[id]);
  }

  /// Snapshot of a run; runs persisted by an earlier process load lazily.
  std::optional<RunEntry> lookup(const std::string& id) {
    {
      std::lock_guard lock(mutex_);
      if (auto it = runs_.find(id); it != runs_.end()) return it->second;
    }
    if (!store_.contains(id)) return std::nullopt;
    RunEntry entry;
    entry.status = Status::kDone;
    entry.result = std::make_shared<const RunResult>(store_.load(id));
    std::lock_guard lock(mutex_);
    return runs_.emplace(id, entry).first->second;
  }

  static nlohmann::ordered_json video_links(const std::string& base, const std::string& name, const Video& v) {
    return {{"sample", name},
            {"first_frame", v.first_frame},
            {"frames", v.frames.size()},
            {"fps", v.fps},
            {"frame", base + "/videos/" + name + "/frames/{t}"}};
  }

  void get_run(const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto entry = lookup(id);
    if (!entry) return fail(res, 404, "UNKNOWN_RUN", "no run " + id);
    nlohmann::ordered_json body;
    body["run_id"] = id;
    body["status"] = std::string(status_name(entry->status));
    body["stage"] = entry->stage;
    if (entry->status == Status::kFailed) body["error"] = entry->error;
    if (entry->result) {
      const RunResult& r = *entry->result;
      const std::string base = "/runs/" + id;
      body["intervention"] = r.intervention_text;
      body["reports"] = nlohmann::ordered_json::array();
      for (const EvalReport& rep : r.reports) body["reports"].push_back(report_json(rep));
      body["warnings"] = r.warnings;
      nlohmann::ordered_json links;
      links["self"] = base;
      links["factual_twin"] = base + "/twins/factual";
      links["factual_video"] = video_links(base, "factual", r.factual_video);
      links["twins"] = nlohmann::ordered_json::array();
      links["videos"] = nlohmann::ordered_json::array();
      for (std::size_t n = 0; n < r.videos.size(); ++n) {
        links["twins"].push_back(base + "/twins/" + std::to_string(n));
        links["videos"].push_back(video_links(base, std::to_string(n), r.videos[n]));
      }
      body["links"] = std::move(links);
    }
    reply(res, 200, body);
  }

  /// Finished run or an error reply; `n` selects "factual" or a sample index.
  std::shared_ptr<const RunResult> ready(const std::string& id, httplib::Response& res) {
    const auto entry = lookup(id);
    if (!entry) {
      fail(res, 404, "UNKNOWN_RUN", "no run " + id);
      return nullptr;
    }
    if (entry->status == Status::kFailed) {
      fail(res, 409, "RUN_FAILED", "run " + id + " failed");
      return nullptr;
    }
    if (entry->status != Status::kDone) {
      fail(res, 409, "RUN_NOT_READY", "run " + id + " is " + std::string(status_name(entry->status)));
      return nullptr;
    }
    return entry->result;
  }

  static std::optional<std::size_t> sample_index(const std::string& name, std::size_t count) {
    if (name.empty() || name.size() > 6 || !std::all_of(name.begin(), name.end(), ::isdigit)) return std::nullopt;
    const std::size_t n = std::stoul(name);
    if (n >= count) return std::nullopt;
    return n;
  }

  void get_twin(const httplib::Request& req, httplib::Response& res) {
    const auto r = ready(req.matches[1], res);
    if (!r) return;
    const std::string name = req.matches[2];
    if (name == "factual") return res.set_content(serialize_twin(r->factual_twin), "application/json");
    const auto n = sample_index(name, r->counterfactuals.size());
    if (!n) return fail(res, 404, "UNKNOWN_SAMPLE", "no sample " + name);
    res.set_content(serialize_twin(r->counterfactuals[*n].twin), "application/json");
  }

  void get_frame(const httplib::Request& req, httplib::Response& res) {
    const auto r = ready(req.matches[1], res);
    if (!r) return;
    const std::string name = req.matches[2];
    const Video* video = nullptr;
    if (name == "factual") {
      video = &r->factual_video;
    } else if (const auto n = sample_index(name, r->videos.size())) {
      video = &r->videos[*n];
    } else {
      return fail(res, 404, "UNKNOWN_SAMPLE", "no sample " + name);
    }
    const int t = std::stoi(req.matches[3]);
    if (t < video->first_frame || t > video->last_frame()) {
      return fail(res, 404, "UNKNOWN_FRAME", "no frame " + std::to_string(t));
    }
    res.set_content(encode_ppm(video->at_index(t)), "image/x-portable-pixmap");
  }

  void delete_run(const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto entry = lookup(id);
    if (!entry) return fail(res, 404, "UNKNOWN_RUN", "no run " + id);
    if (entry->status == Status::kQueued || entry->status == Status::kRunning) {
      return fail(res, 409, "RUN_NOT_READY", "run " + id + " is still " + std::string(status_name(entry->status)));
    }
    if (store_.contains(id)) store_.remove(id);
    {
      std::lock_guard lock(mutex_);
      runs_.erase(id);
    }
    reply(res, 200, {{"run_id", id}, {"status", "deleted"}});
  }

  ServiceConfig config_;
  RunConfig defaults_;
  SessionStore store_;
  httplib::Server server_;
  std::thread listener_;
  std::counting_semaphore<kMaxServiceRuns> slots_;
  std::mutex mutex_;
  std::map<std::string, RunEntry> runs_;
  std::map<std::string, ScenarioSpec> scenarios_;
  std::map<std::string, Video> videos_;
  std::vector<std::thread> workers_;
  int port_ = 0;
};

}  // namespace cwm
