#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cwm/intervene/dsl.hpp"
#include "cwm/intervene/propagate.hpp"
#include "cwm/metrics/image_quality.hpp"
#include "cwm/metrics/report.hpp"
#include "cwm/metrics/success.hpp"
#include "cwm/metrics/video_metrics.hpp"
#include "cwm/sim/edit.hpp"
#include "cwm/sim/render.hpp"
#include "cwm/synth/render.hpp"
#include "support.hpp"

using namespace cwm;
using namespace cwm::testing;

namespace {

Frame noise(int w, int h, std::uint32_t seed) {
  std::mt19937 gen(seed);
  std::uniform_int_distribution<int> byte(0, 255);
  Frame f(w, h);
  for (auto& p : f.pixels) p = static_cast<std::uint8_t>(byte(gen));
  return f;
}

long double psnr_oracle(const Frame& a, const Frame& b) {
  long double sum = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const long double d = static_cast<long double>(a.pixels[i]) - b.pixels[i];
    sum += d * d;
  }
  const long double mse = sum / a.pixels.size();
  return 10.0L * std::log10(65025.0L / mse);
}

long double luma_oracle(const Frame& f, int x, int y) {
  const Rgb c = f.at(x, y);
  return (0.299L * c.r + 0.587L * c.g + 0.114L * c.b);
}

/// Window moments from raw sums: var = E[x^2] - E[x]^2, cov = E[xy] - E[x]E[y].
long double ssim_oracle(const Frame& a, const Frame& b) {
  const long double c1 = 6.5025L, c2 = 58.5225L;
  long double total = 0;
  int windows = 0;
  for (int wy = 0; wy + 8 <= a.height; wy += 8) {
    for (int wx = 0; wx + 8 <= a.width; wx += 8) {
      long double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (int y = wy; y < wy + 8; ++y) {
        for (int x = wx; x < wx + 8; ++x) {
          const long double p = luma_oracle(a, x, y), q = luma_oracle(b, x, y);
          sa += p;
          sb += q;
          saa += p * p;
          sbb += q * q;
          sab += p * q;
        }
      }
      const long double ma = sa / 64, mb = sb / 64;
      const long double va = saa / 64 - ma * ma, vb = sbb / 64 - mb * mb, cov = sab / 64 - ma * mb;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++windows;
    }
  }
  return total / windows;
}

SimObject square(int id, Vec2 p, Vec2 v, int size, Rgb color) {
  SimObject o;
  o.id = id;
  o.color = color;
  o.w = o.h = size;
  o.position = p;
  o.velocity = v;
  return o;
}

std::vector<WorldState> two_squares(int last) {
  WorldState w;
  w.objects = {square(1, {10, 10}, {1, 0}, 4, kPalette[0].rgb), square(2, {40, 40}, {0, 1}, 6, kPalette[2].rgb)};
  w.objects[1].depth_layer = 1;
  return simulate(w, last);
}

}  // namespace

// --- psnr --------------------------------------------------------------------------

TEST(Psnr, IdenticalFramesHitTheCap) {
  const Frame f = noise(16, 16, 1);
  EXPECT_EQ(psnr(f, f), kPsnrCap);
  EXPECT_EQ(kPsnrCap, 99.0);
}

TEST(Psnr, BlackAgainstWhiteIsZero) {
  EXPECT_DOUBLE_EQ(psnr(Frame(8, 8), Frame(8, 8, {255, 255, 255})), 0.0);
}

TEST(Psnr, MatchesOracleOnRandomPairs) {
  for (std::uint32_t s = 0; s < 10; ++s) {
    const Frame a = noise(24, 16, s), b = noise(24, 16, s + 100);
    EXPECT_NEAR(psnr(a, b), static_cast<double>(psnr_oracle(a, b)), 1e-9);
  }
}

TEST(Psnr, OneUnitEverywhere) {
  // MSE = 1 gives 20 log10(255).
  EXPECT_NEAR(psnr(Frame(8, 8, {10, 10, 10}), Frame(8, 8, {11, 11, 11})), 20.0 * std::log10(255.0), 1e-12);
}

TEST(Psnr, DimensionMismatchRejected) {
  try {
    psnr(Frame(8, 8), Frame(8, 9));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kDimensionMismatch);
  }
}

// --- ssim --------------------------------------------------------------------------

TEST(Ssim, IdenticalFramesScoreOne) {
  const Frame f = noise(32, 32, 4);
  EXPECT_NEAR(ssim(f, f), 1.0, 1e-12);
}

TEST(Ssim, ConstantBlackAgainstWhite) {
  const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  EXPECT_NEAR(ssim(Frame(16, 16), Frame(16, 16, {255, 255, 255})), c1 / (255.0 * 255.0 + c1), 1e-12);
}

TEST(Ssim, OneChangedPixelStaysClose) {
  const Frame a = noise(32, 32, 5);
  Frame b = a;
  b.set(3, 3, a.at(3, 3) == Rgb{0, 0, 0} ? Rgb{255, 255, 255} : Rgb{0, 0, 0});
  const double s = ssim(a, b);
  EXPECT_GT(s, 0.9);
  EXPECT_LT(s, 1.0);
}

TEST(Ssim, SymmetricAndInRange) {
  for (std::uint32_t s = 0; s < 10; ++s) {
    const Frame a = noise(24, 24, s), b = noise(24, 24, s + 50);
    EXPECT_DOUBLE_EQ(ssim(a, b), ssim(b, a));
    EXPECT_GE(ssim(a, b), -1.0);
    EXPECT_LE(ssim(a, b), 1.0);
    EXPECT_NEAR(ssim(a, b), static_cast<double>(ssim_oracle(a, b)), 1e-9);
  }
}

TEST(Ssim, PartialEdgeWindowsAreSkipped) {
  // Only the top-left 8x8 window counts; the changed pixel sits outside it.
  const Frame a = noise(12, 12, 9);
  Frame b = a;
  b.set(10, 10, {static_cast<std::uint8_t>(a.at(10, 10).r ^ 0xff), 0, 0});
  EXPECT_NEAR(ssim(a, b), 1.0, 1e-12);
}

TEST(Ssim, TooSmallRejected) {
  try {
    ssim(Frame(7, 7), Frame(7, 7));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kTooSmall);
  }
}

// --- coherence ---------------------------------------------------------------------

TEST(Coherence, StillVideoScoresOne) {
  Video v;
  v.frames.assign(4, noise(16, 16, 2));
  EXPECT_NEAR(frame_coherence(v), 1.0, 1e-12);
}

TEST(Coherence, TwoFramesIsOneSsim) {
  Video v;
  v.frames = {noise(16, 16, 2), noise(16, 16, 3)};
  EXPECT_DOUBLE_EQ(frame_coherence(v), ssim(v.frames[0], v.frames[1]));
}

TEST(Coherence, OrderedBeatsShuffled) {
  const Video ordered = render_states(seeded_states(7, 15));
  Video shuffled = ordered;
  std::mt19937 gen(3);
  std::shuffle(shuffled.frames.begin(), shuffled.frames.end(), gen);
  EXPECT_GT(frame_coherence(ordered), frame_coherence(shuffled));
}

TEST(Coherence, SingleFrameRejected) {
  Video v;
  v.frames = {Frame(8, 8)};
  try {
    frame_coherence(v);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kTooShort);
  }
}

// --- grounding ---------------------------------------------------------------------

TEST(Grounding, OwnRenderScoresOne) {
  const TwinSequence twin = twin_from_world(seeded_states(4, 10));
  EXPECT_DOUBLE_EQ(grounding_iou(render_video(twin), twin), 1.0);
}

TEST(Grounding, MissingTargetHalfTheTime) {
  // Single object; frames 0..3 show it, frames 4..7 do not.
  WorldState w;
  w.objects = {square(1, {20, 20}, {1, 0}, 4, kPalette[0].rgb)};
  const auto states = simulate(w, 7);
  const TwinSequence twin = twin_from_world(states);
  Video v = render_states(states);
  for (std::size_t i = 4; i < v.frames.size(); ++i) v.frames[i] = Frame(64, 64);
  EXPECT_DOUBLE_EQ(grounding_iou(v, twin), 0.5);
}

TEST(Grounding, EmptyTwinScoresOne) {
  TwinSequence twin;
  twin.grid = {16, 16};
  twin.frame_range = {0, 1};
  Video v;
  v.frames = {Frame(16, 16), Frame(16, 16)};
  EXPECT_DOUBLE_EQ(grounding_iou(v, twin), 1.0);
}

TEST(Grounding, FrameCountMustMatchTheTwin) {
  const TwinSequence twin = twin_from_world(seeded_states(4, 3));
  Video v = render_video(twin);
  v.frames.pop_back();
  try {
    grounding_iou(v, twin);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kRangeMismatch);
  }
}

// --- intervention success ----------------------------------------------------------

TEST(Success, RemovedTargetScoresOne) {
  const TwinSequence factual = twin_from_world(two_squares(10));
  const Intervention i = parse_intervention("REMOVE id=2 AT t=3");
  const Video cf = render_video(propagate(factual, i, 7).twin);
  EXPECT_DOUBLE_EQ(intervention_success(factual, cf, i), 1.0);
}

TEST(Success, FactualVideoFailsRemove) {
  const TwinSequence factual = twin_from_world(two_squares(10));
  const Intervention i = parse_intervention("REMOVE id=2 AT t=3");
  EXPECT_DOUBLE_EQ(intervention_success(factual, render_video(factual), i), 0.0);
}

TEST(Success, NullAlwaysSucceeds) {
  const TwinSequence factual = twin_from_world(two_squares(4));
  EXPECT_DOUBLE_EQ(intervention_success(factual, render_video(factual), parse_intervention("NULL")), 1.0);
}

TEST(Success, MotionAndFreezeFollowTheirRollouts) {
  const auto states = two_squares(12);
  const TwinSequence factual = twin_from_world(states);
  for (const char* text : {"SET id=1 velocity=(0,2) AT t=2", "FREEZE id=1 AT t=2 FOR 5",
                           "REPLACE id=1 WITH shape=circle color=white AT t=2"}) {
    const Intervention i = parse_intervention(text);
    const Video v = render_states(simulate(apply_world_edit(states[2], i), 10));
    EXPECT_DOUBLE_EQ(intervention_success(factual, v, i), 1.0) << text;
    EXPECT_LT(intervention_success(factual, render_video(crop_twin(factual, {2, 12})), i), 1.0) << text;
  }
}

TEST(Success, NaturalLanguageUnsupported) {
  const TwinSequence factual = twin_from_world(two_squares(2));
  Intervention i;
  i.kind = InterventionKind::kNatural;
  i.query = "do something";
  try {
    intervention_success(factual, render_video(factual), i);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kUnsupportedIntervention);
  }
}

TEST(Success, UnknownTargetRejected) {
  const TwinSequence factual = twin_from_world(two_squares(2));
  try {
    intervention_success(factual, render_video(factual), parse_intervention("REMOVE id=7 AT t=0"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kUnknownId);
  }
}

// --- reports -----------------------------------------------------------------------

namespace {

EvalReport sample_report() {
  const auto states = two_squares(8);
  const TwinSequence factual = twin_from_world(states);
  const Video reference = render_states(states);
  const Intervention i = parse_intervention("REMOVE id=2 AT t=4");
  static CounterfactualTwin cf;
  static Video video;
  cf = propagate(factual, i, 6);
  video = render_video(cf.twin);
  EvalInputs in;
  in.reference = &reference;
  in.factual = &factual;
  in.video = &video;
  in.twin = &cf.twin;
  in.intervention = &i;
  in.sample = 2;
  return evaluate(in);
}

}  // namespace

TEST(Report, EvaluateCoversOverlapOnly) {
  const EvalReport r = sample_report();
  EXPECT_EQ(r.sample, 2);
  EXPECT_EQ(r.frames, 7);
  EXPECT_EQ(r.compared_frames, 5);
  ASSERT_EQ(r.per_frame.size(), 7u);
  EXPECT_TRUE(r.per_frame[4].psnr.has_value());
  EXPECT_FALSE(r.per_frame[5].psnr.has_value());
  EXPECT_DOUBLE_EQ(r.grounding_iou, 1.0);
  EXPECT_EQ(r.intervention_success, 1.0);
}

TEST(Report, JsonRoundTrip) {
  const EvalReport r = sample_report();
  const auto text = report_json(r).dump();
  EXPECT_EQ(report_from_json(nlohmann::json::parse(text)), r);
  EvalReport natural = r;
  natural.intervention_success.reset();
  EXPECT_TRUE(report_json(natural)["intervention_success"].is_null());
  EXPECT_EQ(report_from_json(nlohmann::json::parse(report_json(natural).dump())), natural);
}

TEST(Report, TextAndCsv) {
  const EvalReport r = sample_report();
  const KeyValues kv = parse_key_values(report_text(r));
  EXPECT_EQ(kv.at("report_version"), "1");
  EXPECT_EQ(kv.at("sample"), "2");
  EXPECT_EQ(kv.at("intervention_success"), "1");
  EvalReport natural = r;
  natural.intervention_success.reset();
  EXPECT_EQ(parse_key_values(report_text(natural)).at("intervention_success"), "none");

  const std::string csv = report_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "frame,psnr,ssim,grounding_iou");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 8);
  EXPECT_NE(csv.find("\n10,,,1\n"), std::string::npos);
}

TEST(Report, BadJsonIsSchemaError) {
  EXPECT_THROW(report_from_json(nlohmann::json::parse("{\"sample\": 1}")), SchemaError);
}
