#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "json.hpp"

#include "cwm/core/canonical.hpp"
#include "cwm/core/error.hpp"
#include "cwm/core/hash.hpp"
#include "cwm/image/ppm.hpp"
#include "cwm/intervene/dsl.hpp"
#include "cwm/intervene/llm_client.hpp"
#include "cwm/intervene/sampling.hpp"
#include "cwm/metrics/report.hpp"
#include "cwm/perception/perceive.hpp"
#include "cwm/pipeline/config.hpp"
#include "cwm/sim/render.hpp"
#include "cwm/sim/scenario.hpp"
#include "cwm/synth/consistency.hpp"
#include "cwm/synth/diffusion_client.hpp"
#include "cwm/synth/render.hpp"
#include "cwm/twin/codec.hpp"
#include "cwm/twin/condense.hpp"

namespace cwm {

inline constexpr std::string_view kRunVersion = "1";

using RunInput = std::variant<ScenarioSpec, Video>;

struct RunResult {
  std::string run_id;
  /// "scenario" with the spec text, or "video" with the input's PPM-stream hash.
  std::string input_kind;
  std::string input_text;
  std::string intervention_text;
  std::string config_snapshot;
  Video factual_video;
  TwinSequence factual_twin;
  std::vector<CounterfactualTwin> counterfactuals;
  std::vector<Frame> edited_first_frames;
  std::vector<double> consistency;
  std::vector<Video> videos;
  std::vector<EvalReport> reports;
  std::vector<std::string> warnings;
  /// Wall-clock milliseconds per stage; not part of the canonical serialization.
  std::map<std::string, double> timings;

  friend bool operator==(const RunResult&, const RunResult&) = default;
};

using StageObserver = std::function<void(const std::string& stage)>;

namespace detail {

/// Runs one stage, recording its time and tagging any failure with its name.
template <class F>
auto run_stage(const std::string& name, RunResult& result, const StageObserver& observer, F&& body) {
  if (observer) observer(name);
  const auto start = std::chrono::steady_clock::now();
  auto record = [&] {
    const std::chrono::duration<double, std::milli> spent = std::chrono::steady_clock::now() - start;
    result.timings[name] += spent.count();
  };
  try {
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      record();
    } else {
      auto out = body();
      record();
      return out;
    }
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e.code(), e.what());
  } catch (const std::exception& e) {
    throw StageError(name, Errc::kInvariant, e.what());
  }
}

inline std::string video_hash(const Video& v) { return sha256_hex(encode_ppm_stream(v.frames)); }

}  // namespace detail

/// f_cf: factual input + intervention -> N counterfactual videos with reports.
/// Stages: parse, simulate (scenario input), perceive, condense, intervene,
/// edit, synthesize, evaluate. Any failure is a StageError naming its stage.
inline RunResult run_counterfactual(const RunInput& input, const std::string& intervention_text,
                                    const RunConfig& config, const StageObserver& observer = {}) {
  RunResult result;
  result.intervention_text = intervention_text;
  result.config_snapshot = run_config_text(config);
  detail::run_stage("config", result, observer, [&] { require_valid(config); });
  const Intervention intervention =
      detail::run_stage("parse", result, observer, [&] { return read_intervention(intervention_text); });
  const int t = intervention.at_frame;
  const int k = config.horizon;
  const Rgb background = config.style.background;

  if (const auto* spec = std::get_if<ScenarioSpec>(&input)) {
    result.input_kind = "scenario";
    result.input_text = scenario_to_text(*spec);
    result.factual_video = detail::run_stage("simulate", result, observer, [&] {
      const int frames = config.frames > 0 ? config.frames : t + k + 1;
      Video v = render_states(simulate(generate_scenario(*spec), frames - 1), config.style);
      v.fps = config.fps;
      return v;
    });
  } else {
    result.input_kind = "video";
    result.factual_video = std::get<Video>(input);
    result.input_text = detail::video_hash(result.factual_video);
  }
  result.factual_twin =
      detail::run_stage("perceive", result, observer, [&] { return perceive(result.factual_video, background); });
  detail::run_stage("condense", result, observer, [&] { condense(result.factual_twin, config.epsilon); });

  result.counterfactuals = detail::run_stage("intervene", result, observer, [&] {
    const bool use_llm = intervention.kind == InterventionKind::kNatural || config.intervene_backend == Backend::kService;
    if (use_llm) {
      if (config.llm.endpoint.empty()) throw Error(Errc::kConfig, "llm.endpoint is not configured");
      BackendConfig llm = config.llm;
      llm.samples = config.samples;
      return llm_sample_trajectories(result.factual_twin, intervention, k, config.epsilon, llm);
    }
    BackendConfig deterministic;
    deterministic.samples = config.samples;
    deterministic.seed = config.seed;
    return sample_trajectories(result.factual_twin, intervention, k, deterministic);
  });

  const GridSize grid = result.factual_twin.grid;
  detail::run_stage("edit", result, observer, [&] {
    const auto factual_t = result.factual_twin.records_at(t);
    const Frame& original = result.factual_video.at_index(t);
    for (const CounterfactualTwin& cf : result.counterfactuals) {
      const auto edited_t = cf.twin.records_at(t);
      Frame edited = edit_first_frame(original, factual_t, edited_t, grid, config.style);
      const double score = check_consistency(edited, edited_t, background);
      if (score < config.consistency_threshold) {
        throw Error(Errc::kConsistencyRejected, "sample " + std::to_string(cf.sample) + ": first-frame consistency " +
                                                    format_exact(score) + " below threshold " +
                                                    format_exact(config.consistency_threshold));
      }
      result.edited_first_frames.push_back(std::move(edited));
      result.consistency.push_back(score);
    }
  });

  detail::run_stage("synthesize", result, observer, [&] {
    for (std::size_t n = 0; n < result.counterfactuals.size(); ++n) {
      const CounterfactualTwin& cf = result.counterfactuals[n];
      if (config.synthesize_backend == SynthesisBackend::kDeterministic) {
        result.videos.push_back(render_video(cf.twin, config.style, config.fps));
        continue;
      }
      SynthesisRequest request;
      request.first_frame = result.edited_first_frames[n];
      request.twin = condense(cf.twin, config.epsilon);
      request.frames = cf.twin.frame_range.span();
      request.first_frame_index = cf.twin.frame_range.first;
      request.fps = config.fps;
      Video video = diffusion_synthesize(request, config.diffusion);
      const double score = check_consistency(video.frames.front(), cf.twin.records_at(t), background);
      if (score < config.consistency_threshold) {
        result.warnings.push_back("sample " + std::to_string(cf.sample) + ": synthesized frame 0 consistency " +
                                  format_exact(score) + " below threshold " + format_exact(config.consistency_threshold));
      }
      result.videos.push_back(std::move(video));
    }
  });

  detail::run_stage("evaluate", result, observer, [&] {
    for (std::size_t n = 0; n < result.videos.size(); ++n) {
      EvalInputs in;
      in.reference = &result.factual_video;
      in.factual = &result.factual_twin;
      in.video = &result.videos[n];
      in.twin = &result.counterfactuals[n].twin;
      in.intervention = &intervention;
      in.background = background;
      in.sample = static_cast<int>(n);
      result.reports.push_back(evaluate(in));
    }
  });
  return result;
}

namespace detail {

inline nlohmann::ordered_json video_ref(const Video& v) {
  nlohmann::ordered_json j;
  j["first_frame"] = v.first_frame;
  j["fps"] = v.fps;
  j["frames"] = v.frames.size();
  j["sha256"] = video_hash(v);
  return j;
}

inline nlohmann::ordered_json twin_json(const TwinSequence& twin) {
  return nlohmann::ordered_json::parse(serialize_twin(twin));
}

}  // namespace detail

/// Canonical run document: everything but the run id and timings, with
/// videos referenced by the SHA-256 of their concatenated PPM frames.
inline std::string serialize_run(const RunResult& r) {
  nlohmann::ordered_json doc;
  doc["run_version"] = std::string(kRunVersion);
  doc["input"] = {{"kind", r.input_kind}, {"text", r.input_text}};
  doc["intervention"] = r.intervention_text;
  doc["config"] = r.config_snapshot;
  doc["factual_video"] = detail::video_ref(r.factual_video);
  doc["factual_twin"] = detail::twin_json(r.factual_twin);
  doc["samples"] = nlohmann::ordered_json::array();
  for (std::size_t n = 0; n < r.counterfactuals.size(); ++n) {
    const CounterfactualTwin& cf = r.counterfactuals[n];
    nlohmann::ordered_json s;
    s["sample"] = cf.sample;
    s["provenance"] = cf.provenance;
    s["twin"] = detail::twin_json(cf.twin);
    s["trajectories"] = nlohmann::ordered_json::array();
    for (const auto& [id, path] : cf.trajectories) {
      nlohmann::ordered_json points = nlohmann::ordered_json::array();
      for (const Vec2& p : path) points.push_back({p.x, p.y});
      s["trajectories"].push_back({{"id", id}, {"points", std::move(points)}});
    }
    if (n < r.edited_first_frames.size()) s["edited_first_frame"] = sha256_hex(encode_ppm(r.edited_first_frames[n]));
    if (n < r.consistency.size()) s["consistency"] = r.consistency[n];
    if (n < r.videos.size()) s["video"] = detail::video_ref(r.videos[n]);
    if (n < r.reports.size()) s["report"] = report_json(r.reports[n]);
    doc["samples"].push_back(std::move(s));
  }
  doc["warnings"] = r.warnings;
  return doc.dump();
}

}  // namespace cwm
