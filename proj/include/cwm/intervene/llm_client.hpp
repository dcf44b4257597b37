#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cwm/core/error.hpp"
#include "cwm/intervene/sampling.hpp"
#include "cwm/net/http_client.hpp"
#include "cwm/twin/codec.hpp"
#include "cwm/twin/condense.hpp"

namespace cwm {

inline constexpr std::string_view kCondensedSchema = "condensed_twin/1";

inline constexpr std::string_view kLlmPreamble =
    "You edit digital twin representations of short videos. The condensed twin lists every object with its "
    "category, attributes, coarse regions visited, motion keypoints [frame, x, y] in grid cells, depth span and "
    "area span. Apply the query as a counterfactual intervention: change the affected objects and how their motion, "
    "depth and area evolve afterwards, and keep unaffected objects as they are.";

inline constexpr std::string_view kLlmSchemaInstructions =
    "Reply with a JSON object {\"condensed_twin\": <document>} where <document> uses exactly the keys of the input "
    "document (twin_version, summary, spatial_summary, grid, elements; per element id, category, attributes, "
    "region_labels, motion_keypoints, depth_span, area_span and optionally size). Keypoint frames must ascend.";

inline std::string llm_prompt(const std::string& condensed_text, const std::string& query) {
  return std::string(kLlmPreamble) + "\n\nCondensed twin:\n" + condensed_text + "\n\nQuery: " + query + "\n\n" +
         std::string(kLlmSchemaInstructions);
}

inline HttpTarget llm_target(const BackendConfig& config) {
  if (config.endpoint.empty()) throw Error(Errc::kConfig, "llm.endpoint is not configured");
  HttpTarget target = parse_endpoint(config.endpoint);
  target.token = config.token;
  target.timeout_seconds = config.timeout_seconds;
  target.retry_budget = config.retry_budget;
  return target;
}

namespace detail {

/// Reads {"condensed_twin": {...}}; on failure `problem` describes why.
inline std::optional<CondensedTwin> read_llm_reply(const std::string& body, std::string& problem) {
  try {
    const Json reply = codec::parse_json(body);
    if (!reply.is_object() || !reply.contains("condensed_twin")) {
      throw SchemaError("/condensed_twin", "missing field");
    }
    return condensed_from_json(reply["condensed_twin"]);
  } catch (const Error& e) {
    problem = std::string(e.name()) + ": " + e.what();
    return std::nullopt;
  }
}

}  // namespace detail

/// Sends the condensed twin and query to the LLM service. A reply that does
/// not parse as a valid condensed twin gets exactly one repair round trip
/// quoting the violations; a second bad reply raises InvalidReply.
inline CondensedTwin llm_edit(const CondensedTwin& condensed, const std::string& query, const BackendConfig& config,
                              int sample = 0) {
  const HttpTarget target = llm_target(config);
  const std::string condensed_text = serialize_condensed(condensed);
  Json request;
  request["condensed_twin"] = Json::parse(condensed_text);
  request["query"] = query;
  request["schema"] = std::string(kCondensedSchema);
  request["prompt"] = llm_prompt(condensed_text, query);
  request["sample"] = sample;

  std::string reply = post_with_retry(target, request.dump());
  std::string problem;
  if (auto twin = detail::read_llm_reply(reply, problem)) return *twin;
  request["repair"] = {{"violations", Json::array({problem})}, {"previous_reply", reply}};
  reply = post_with_retry(target, request.dump());
  if (auto twin = detail::read_llm_reply(reply, problem)) return *twin;
  throw Error(Errc::kInvalidReply, "reply still invalid after one repair: " + problem);
}

/// LLM-backed sampling: each sample is one edit request, expanded back to a
/// full twin over [t, t + k].
inline std::vector<CounterfactualTwin> llm_sample_trajectories(const TwinSequence& source, const Intervention& intervention,
                                                               int k, double epsilon, const BackendConfig& config) {
  if (config.samples < 1) throw Error(Errc::kInvalidParam, "sample count must be at least 1");
  if (k < 0) throw Error(Errc::kHorizon, "horizon must be non-negative");
  const std::string query = intervention.kind == InterventionKind::kNatural ? intervention.query : to_dsl(intervention);
  const CondensedTwin condensed = condense(source, epsilon);
  std::vector<CounterfactualTwin> out;
  for (int n = 0; n < config.samples; ++n) {
    const CondensedTwin edited = llm_edit(condensed, query, config, n);
    CounterfactualTwin cf;
    cf.intervention = intervention;
    cf.sample = n;
    cf.provenance = "llm sample=" + std::to_string(n);
    const FrameRange window{intervention.at_frame, intervention.at_frame + k};
    FrameRange span = window;
    for (const CondensedElement& e : edited.elements) {
      span.first = std::min(span.first, e.motion_keypoints.front().frame);
      span.last = std::max(span.last, e.motion_keypoints.back().frame);
    }
    cf.twin = crop_twin(expand(edited, span), window);
    for (const ObjectTrace& e : cf.twin.elements) {
      std::vector<Vec2>& path = cf.trajectories[e.id];
      for (const Vec2& c : e.centroid_trace) path.push_back(c);
    }
    out.push_back(std::move(cf));
  }
  return out;
}

}  // namespace cwm
