#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cwm/core/canonical.hpp"
#include "cwm/core/error.hpp"
#include "cwm/core/key_value.hpp"
#include "cwm/image/style.hpp"
#include "cwm/intervene/sampling.hpp"
#include "cwm/synth/consistency.hpp"

namespace cwm {

enum class SynthesisBackend { kDeterministic, kDiffusion };

struct RunConfig {
  int horizon = 16;
  int samples = 3;
  double epsilon = 0.5;
  double consistency_threshold = kDefaultConsistencyThreshold;
  std::uint64_t seed = 0;
  /// Frames simulated for scenario inputs; 0 means t + horizon + 1.
  int frames = 0;
  double fps = 24.0;
  Backend intervene_backend = Backend::kDeterministic;
  SynthesisBackend synthesize_backend = SynthesisBackend::kDeterministic;
  BackendConfig llm;
  BackendConfig diffusion;
  RenderStyle style;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Service settings share the config file with RunConfig.
struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  int max_runs = 2;
  std::string store = "cwmdt-store";
  std::string token;

  friend bool operator==(const ServiceConfig&, const ServiceConfig&) = default;
};

inline std::string rgb_text(Rgb c) {
  return std::to_string(c.r) + ',' + std::to_string(c.g) + ',' + std::to_string(c.b);
}

/// "R,G,B" with each channel in [0, 255].
inline Rgb parse_rgb(std::string_view key, const std::string& text) {
  Rgb out;
  std::uint8_t* channels[] = {&out.r, &out.g, &out.b};
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    const std::size_t end = i < 2 ? text.find(',', pos) : text.size();
    if (end == std::string::npos) throw Error(Errc::kConfig, std::string(key) + ": expected R,G,B");
    const int v = parse_number<int>(key, trim(std::string_view(text).substr(pos, end - pos)));
    if (v < 0 || v > 255) throw Error(Errc::kConfig, std::string(key) + ": channel out of range");
    *channels[i] = static_cast<std::uint8_t>(v);
    pos = end + 1;
  }
  return out;
}

inline const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys{
      "run.horizon",          "run.samples",        "run.epsilon",          "run.consistency_threshold",
      "run.seed",             "run.frames",         "run.fps",              "intervene.backend",
      "synthesize.backend",   "llm.endpoint",       "llm.token",            "llm.timeout",
      "llm.retry_budget",     "diffusion.endpoint", "diffusion.token",      "diffusion.timeout",
      "diffusion.retry_budget", "style.background", "style.scale"};
  return keys;
}

inline const std::vector<std::string>& service_config_keys() {
  static const std::vector<std::string> keys{"service.host", "service.port", "service.max_runs", "service.store",
                                             "service.token"};
  return keys;
}

inline void require_valid(const RunConfig& c) {
  auto bad = [](const std::string& m) { throw Error(Errc::kInvalidParam, m); };
  if (c.horizon < 0) bad("run.horizon must be non-negative");
  if (c.samples < 1) bad("run.samples must be at least 1");
  if (!(c.epsilon > 0.0)) bad("run.epsilon must be positive");
  if (!(c.consistency_threshold >= 0.0 && c.consistency_threshold <= 1.0)) {
    bad("run.consistency_threshold must lie in [0, 1]");
  }
  if (c.frames < 0) bad("run.frames must be non-negative");
  if (!(c.fps > 0.0)) bad("run.fps must be positive");
  if (c.style.scale != 1) bad("style.scale must be 1 for runs; scaled output is a synthesize option");
  if (c.llm.retry_budget < 0 || c.diffusion.retry_budget < 0) bad("retry budgets must be non-negative");
}

/// Applies recognised keys; other keys raise ConfigError unless `allow_other`
/// (used when a file also carries service keys).
inline void apply_run_config(RunConfig& c, const KeyValues& kv, bool allow_other = false) {
  for (const auto& [key, value] : kv) {
    if (key == "run.horizon") c.horizon = parse_number<int>(key, value);
    else if (key == "run.samples") c.samples = parse_number<int>(key, value);
    else if (key == "run.epsilon") c.epsilon = parse_number<double>(key, value);
    else if (key == "run.consistency_threshold") c.consistency_threshold = parse_number<double>(key, value);
    else if (key == "run.seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "run.frames") c.frames = parse_number<int>(key, value);
    else if (key == "run.fps") c.fps = parse_number<double>(key, value);
    else if (key == "intervene.backend") {
      if (value == "deterministic") c.intervene_backend = Backend::kDeterministic;
      else if (value == "llm") c.intervene_backend = Backend::kService;
      else throw Error(Errc::kConfig, key + ": expected deterministic or llm");
    } else if (key == "synthesize.backend") {
      if (value == "deterministic") c.synthesize_backend = SynthesisBackend::kDeterministic;
      else if (value == "diffusion") c.synthesize_backend = SynthesisBackend::kDiffusion;
      else throw Error(Errc::kConfig, key + ": expected deterministic or diffusion");
    } else if (key == "llm.endpoint") c.llm.endpoint = value;
    else if (key == "llm.token") c.llm.token = value;
    else if (key == "llm.timeout") c.llm.timeout_seconds = parse_number<double>(key, value);
    else if (key == "llm.retry_budget") c.llm.retry_budget = parse_number<int>(key, value);
    else if (key == "diffusion.endpoint") c.diffusion.endpoint = value;
    else if (key == "diffusion.token") c.diffusion.token = value;
    else if (key == "diffusion.timeout") c.diffusion.timeout_seconds = parse_number<double>(key, value);
    else if (key == "diffusion.retry_budget") c.diffusion.retry_budget = parse_number<int>(key, value);
    else if (key == "style.background") c.style.background = parse_rgb(key, value);
    else if (key == "style.scale") c.style.scale = parse_number<int>(key, value);
    else if (!allow_other) throw Error(Errc::kConfig, "unknown config key '" + key + "'");
  }
  c.llm.backend = c.intervene_backend;
  c.llm.samples = c.samples;
  c.llm.seed = c.seed;
  c.diffusion.samples = c.samples;
  c.diffusion.seed = c.seed;
}

inline RunConfig run_config_from_key_values(KeyValues kv, bool allow_other = false) {
  RunConfig c;
  apply_run_config(c, kv, allow_other);
  require_valid(c);
  return c;
}

/// Config file text plus CWMDT_* environment overrides.
inline RunConfig load_run_config(const std::string& text) {
  KeyValues kv = parse_key_values(text);
  apply_env_overrides(kv, run_config_keys());
  return run_config_from_key_values(std::move(kv), true);
}

inline std::string run_config_text(const RunConfig& c) {
  return format_key_values(
      {{"run.horizon", std::to_string(c.horizon)},
       {"run.samples", std::to_string(c.samples)},
       {"run.epsilon", format_exact(c.epsilon)},
       {"run.consistency_threshold", format_exact(c.consistency_threshold)},
       {"run.seed", std::to_string(c.seed)},
       {"run.frames", std::to_string(c.frames)},
       {"run.fps", format_exact(c.fps)},
       {"intervene.backend", c.intervene_backend == Backend::kService ? "llm" : "deterministic"},
       {"synthesize.backend", c.synthesize_backend == SynthesisBackend::kDiffusion ? "diffusion" : "deterministic"},
       {"llm.endpoint", c.llm.endpoint},
       {"llm.timeout", format_exact(c.llm.timeout_seconds)},
       {"llm.retry_budget", std::to_string(c.llm.retry_budget)},
       {"diffusion.endpoint", c.diffusion.endpoint},
       {"diffusion.timeout", format_exact(c.diffusion.timeout_seconds)},
       {"diffusion.retry_budget", std::to_string(c.diffusion.retry_budget)},
       {"style.background", rgb_text(c.style.background)},
       {"style.scale", std::to_string(c.style.scale)}});
}

inline ServiceConfig load_service_config(const std::string& text) {
  KeyValues kv = parse_key_values(text);
  apply_env_overrides(kv, service_config_keys());
  ServiceConfig s;
  for (const auto& [key, value] : kv) {
    if (key == "service.host") s.host = value;
    else if (key == "service.port") s.port = parse_number<int>(key, value);
    else if (key == "service.max_runs") s.max_runs = parse_number<int>(key, value);
    else if (key == "service.store") s.store = value;
    else if (key == "service.token") s.token = value;
  }
  if (s.max_runs < 1) throw Error(Errc::kInvalidParam, "service.max_runs must be at least 1");
  if (s.port < 0 || s.port > 65535) throw Error(Errc::kInvalidParam, "service.port out of range");
  return s;
}

}  // namespace cwm
