#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cwm/core/canonical.hpp"
#include "cwm/core/error.hpp"
#include "cwm/core/key_value.hpp"
#include "cwm/image/frame.hpp"
#include "cwm/intervene/intervention.hpp"
#include "cwm/metrics/image_quality.hpp"
#include "cwm/metrics/success.hpp"
#include "cwm/metrics/video_metrics.hpp"
#include "cwm/twin/twin.hpp"

namespace cwm {

inline constexpr std::string_view kReportVersion = "1";

struct FrameScores {
  int frame = 0;
  /// Against the reference video; absent where it has no such frame.
  std::optional<double> psnr;
  std::optional<double> ssim;
  double grounding_iou = 0.0;

  friend bool operator==(const FrameScores&, const FrameScores&) = default;
};

/// Scores of one counterfactual sample. psnr/ssim compare against the
/// factual video over the frames both cover (0 when none overlap);
/// intervention_success is absent for natural-language queries.
struct EvalReport {
  int sample = 0;
  int frames = 0;
  int compared_frames = 0;
  double psnr_mean = 0.0;
  double ssim_mean = 0.0;
  double frame_coherence = 1.0;
  double grounding_iou = 1.0;
  std::optional<double> intervention_success;
  std::vector<FrameScores> per_frame;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct EvalInputs {
  const Video* reference = nullptr;
  const TwinSequence* factual = nullptr;
  const Video* video = nullptr;
  const TwinSequence* twin = nullptr;
  const Intervention* intervention = nullptr;
  Rgb background{};
  int sample = 0;
};

inline EvalReport evaluate(const EvalInputs& in) {
  if (!in.video || !in.twin) throw Error(Errc::kInvalidParam, "evaluation needs a video and its twin");
  const Video& video = *in.video;
  EvalReport report;
  report.sample = in.sample;
  report.frames = static_cast<int>(video.frames.size());
  if (video.frames.size() >= 2) report.frame_coherence = frame_coherence(video);
  report.grounding_iou = grounding_iou(video, *in.twin, in.background);

  double psnr_total = 0.0;
  double ssim_total = 0.0;
  for (std::size_t i = 0; i < video.frames.size(); ++i) {
    FrameScores s;
    s.frame = video.first_frame + static_cast<int>(i);
    const auto g = grounding_scores(video.frames[i], *in.twin, s.frame, in.background);
    s.grounding_iou = g.empty() ? 1.0 : [&] {
      double sum = 0.0;
      for (double v : g) sum += v;
      return sum / static_cast<double>(g.size());
    }();
    if (in.reference && s.frame >= in.reference->first_frame && s.frame <= in.reference->last_frame()) {
      const Frame& ref = in.reference->at_index(s.frame);
      s.psnr = psnr(ref, video.frames[i]);
      s.ssim = ssim(ref, video.frames[i]);
      psnr_total += *s.psnr;
      ssim_total += *s.ssim;
      ++report.compared_frames;
    }
    report.per_frame.push_back(s);
  }
  if (report.compared_frames > 0) {
    report.psnr_mean = psnr_total / report.compared_frames;
    report.ssim_mean = ssim_total / report.compared_frames;
  }
  if (in.intervention && in.factual && in.intervention->kind != InterventionKind::kNatural) {
    report.intervention_success = intervention_success(*in.factual, video, *in.intervention, in.background);
  }
  return report;
}

inline std::string report_text(const EvalReport& r) {
  return format_key_values({
      {"report_version", std::string(kReportVersion)},
      {"sample", std::to_string(r.sample)},
      {"frames", std::to_string(r.frames)},
      {"compared_frames", std::to_string(r.compared_frames)},
      {"psnr_mean", format_exact(r.psnr_mean)},
      {"ssim_mean", format_exact(r.ssim_mean)},
      {"frame_coherence", format_exact(r.frame_coherence)},
      {"grounding_iou", format_exact(r.grounding_iou)},
      {"intervention_success", r.intervention_success ? format_exact(*r.intervention_success) : "none"},
  });
}

inline std::string report_csv(const EvalReport& r) {
  std::string out = "frame,psnr,ssim,grounding_iou\n";
  for (const FrameScores& s : r.per_frame) {
    out += std::to_string(s.frame) + ',' + (s.psnr ? format_exact(*s.psnr) : "") + ',' +
           (s.ssim ? format_exact(*s.ssim) : "") + ',' + format_exact(s.grounding_iou) + '\n';
  }
  return out;
}

inline nlohmann::ordered_json report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["sample"] = r.sample;
  j["frames"] = r.frames;
  j["compared_frames"] = r.compared_frames;
  j["psnr_mean"] = r.psnr_mean;
  j["ssim_mean"] = r.ssim_mean;
  j["frame_coherence"] = r.frame_coherence;
  j["grounding_iou"] = r.grounding_iou;
  j["intervention_success"] = r.intervention_success ? nlohmann::ordered_json(*r.intervention_success) : nullptr;
  j["per_frame"] = nlohmann::ordered_json::array();
  for (const FrameScores& s : r.per_frame) {
    nlohmann::ordered_json f;
    f["frame"] = s.frame;
    f["psnr"] = s.psnr ? nlohmann::ordered_json(*s.psnr) : nullptr;
    f["ssim"] = s.ssim ? nlohmann::ordered_json(*s.ssim) : nullptr;
    f["grounding_iou"] = s.grounding_iou;
    j["per_frame"].push_back(std::move(f));
  }
  return j;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
  auto optional_number = [](const nlohmann::json& v) -> std::optional<double> {
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
  };
  try {
    EvalReport r;
    r.sample = j.at("sample").get<int>();
    r.frames = j.at("frames").get<int>();
    r.compared_frames = j.at("compared_frames").get<int>();
    r.psnr_mean = j.at("psnr_mean").get<double>();
    r.ssim_mean = j.at("ssim_mean").get<double>();
    r.frame_coherence = j.at("frame_coherence").get<double>();
    r.grounding_iou = j.at("grounding_iou").get<double>();
    r.intervention_success = optional_number(j.at("intervention_success"));
    for (const auto& f : j.at("per_frame")) {
      FrameScores s;
      s.frame = f.at("frame").get<int>();
      s.psnr = optional_number(f.at("psnr"));
      s.ssim = optional_number(f.at("ssim"));
      s.grounding_iou = f.at("grounding_iou").get<double>();
      r.per_frame.push_back(s);
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("/reports", std::string("bad report: ") + e.what());
  }
}

}  // namespace cwm
