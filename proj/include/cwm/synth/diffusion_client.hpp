#pragma once

#include <string>
#include <variant>

#include "httplib.h"

#include "cwm/core/canonical.hpp"
#include "cwm/core/error.hpp"
#include "cwm/image/frame.hpp"
#include "cwm/image/ppm.hpp"
#include "cwm/intervene/sampling.hpp"
#include "cwm/net/http_client.hpp"
#include "cwm/twin/codec.hpp"

namespace cwm {

/// What the video service is conditioned on: the edited first frame and the
/// condensed counterfactual twin.
struct SynthesisRequest {
  Frame first_frame;
  CondensedTwin twin;
  int frames = 1;
  int first_frame_index = 0;
  double fps = 24.0;
};

inline httplib::MultipartFormDataItems diffusion_form(const SynthesisRequest& request) {
  return {
      {"first_frame", encode_ppm(request.first_frame), "first_frame.ppm", "image/x-portable-pixmap"},
      {"twin", serialize_condensed(request.twin), "twin.json", "application/json"},
      {"frames", std::to_string(request.frames), "", "text/plain"},
      {"fps", format_exact(request.fps), "", "text/plain"},
  };
}

/// Posts the request as multipart form data and expects concatenated P6
/// frames back; frame count and dimensions are checked, content is not.
inline Video diffusion_synthesize(const SynthesisRequest& request, const BackendConfig& config) {
  if (request.frames < 1) throw Error(Errc::kInvalidParam, "frame count must be at least 1");
  if (config.endpoint.empty()) throw Error(Errc::kConfig, "diffusion.endpoint is not configured");
  HttpTarget target = parse_endpoint(config.endpoint);
  target.token = config.token;
  target.timeout_seconds = config.timeout_seconds;
  target.retry_budget = config.retry_budget;
  const std::string body = post_with_retry(target, diffusion_form(request));
  Video video;
  video.first_frame = request.first_frame_index;
  video.fps = request.fps;
  try {
    video.frames = decode_ppm_stream(body);
  } catch (const Error& e) {
    throw Error(Errc::kInvalidReply, std::string("video service reply is not a PPM stream: ") + e.what());
  }
  if (static_cast<int>(video.frames.size()) != request.frames) {
    throw Error(Errc::kFrameCountMismatch, "requested " + std::to_string(request.frames) + " frames, received " +
                                               std::to_string(video.frames.size()));
  }
  for (const Frame& f : video.frames) require_same_dimensions(request.first_frame, f);
  return video;
}

}  // namespace cwm
