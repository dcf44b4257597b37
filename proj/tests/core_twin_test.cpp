#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cwm/core/canonical.hpp"
#include "cwm/core/hash.hpp"
#include "cwm/core/key_value.hpp"
#include "cwm/image/raster.hpp"
#include "cwm/intervene/propagate.hpp"
#include "cwm/sim/edit.hpp"
#include "cwm/sim/render.hpp"
#include "cwm/twin/codec.hpp"
#include "cwm/twin/condense.hpp"
#include "cwm/twin/diff.hpp"
#include "cwm/twin/rdp.hpp"
#include "cwm/twin/rle.hpp"
#include "cwm/twin/validate.hpp"
#include "support.hpp"

using namespace cwm;
using namespace cwm::testing;

namespace {

ElementRecord square_record(int frame, double x, double y, int size, GridSize grid, Shape shape = Shape::kRectangle) {
  ElementRecord r;
  r.frame = frame;
  r.spatial = {x, y, 0.0, static_cast<double>(size), static_cast<double>(size)};
  r.mask = rasterize(shape, x, y, size, size, grid);
  return r;
}

/// One 4x4 red square moving by `step` per frame over `frames` frames.
TwinSequence moving_square(int frames, Vec2 start, Vec2 step, GridSize grid = {64, 64}) {
  TwinSequence twin;
  twin.grid = grid;
  twin.frame_range = {0, frames - 1};
  ObjectTrace e;
  e.id = 1;
  e.category = "rectangle";
  e.attributes = "red rectangle";
  for (int f = 0; f < frames; ++f) {
    e.records.push_back(square_record(f, start.x + step.x * f, start.y + step.y * f, 4, grid));
  }
  twin.elements.push_back(e);
  finalize_twin(twin);
  return twin;
}

bool has_code(const std::vector<Violation>& v, const std::string& code) {
  for (const Violation& x : v) {
    if (x.code == code) return true;
  }
  return false;
}

// Independent synchronized-distance RDP on (frame, x, y) triples.
double sed(const MotionKeypoint& a, const MotionKeypoint& b, const MotionKeypoint& p) {
  const double s = b.frame == a.frame ? 0.0 : static_cast<double>(p.frame - a.frame) / (b.frame - a.frame);
  return std::hypot(p.x - (a.x + s * (b.x - a.x)), p.y - (a.y + s * (b.y - a.y)));
}

void reference_rdp(const std::vector<MotionKeypoint>& pts, std::size_t lo, std::size_t hi, double eps,
                   std::vector<bool>& keep) {
  double best = -1.0;
  std::size_t at = lo;
  for (std::size_t i = lo + 1; i < hi; ++i) {
    const double d = sed(pts[lo], pts[hi], pts[i]);
    if (d > best) {
      best = d;
      at = i;
    }
  }
  if (best > eps) {
    keep[at] = true;
    reference_rdp(pts, lo, at, eps, keep);
    reference_rdp(pts, at, hi, eps, keep);
  }
}

std::vector<MotionKeypoint> reference_simplify(const std::vector<MotionKeypoint>& pts, double eps) {
  if (pts.size() < 2) return pts;
  std::vector<bool> keep(pts.size(), false);
  keep.front() = keep.back() = true;
  reference_rdp(pts, 0, pts.size() - 1, eps, keep);
  std::vector<MotionKeypoint> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (keep[i]) out.push_back(pts[i]);
  }
  return out;
}

}  // namespace

// --- canonical numbers, hashing, key-value text --------------------------------

TEST(Canonical, FourDigitFormatting) {
  EXPECT_EQ(format_fixed4(1.0), "1.0000");
  EXPECT_EQ(format_fixed4(-0.25), "-0.2500");
  EXPECT_EQ(format_fixed4(2.0 / 3.0), "0.6667");
  EXPECT_EQ(format_fixed4(-0.00001), "0.0000");
  EXPECT_EQ(quantize(0.123456), 0.1235);
}

TEST(Hash, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(KeyValue, ParsesCommentsAndBlankLines) {
  const KeyValues kv = parse_key_values("# comment\n\n a = 1 \nb=two words\n");
  EXPECT_EQ(kv.at("a"), "1");
  EXPECT_EQ(kv.at("b"), "two words");
  EXPECT_EQ(kv.size(), 2u);
}

TEST(KeyValue, EnvNames) { EXPECT_EQ(env_name_for("run.horizon"), "CWMDT_RUN_HORIZON"); }

// --- RLE masks -------------------------------------------------------------------

TEST(Rle, CanonicalFromCells) {
  std::vector<std::uint8_t> cells(16, 0);
  cells[1] = cells[2] = cells[3] = cells[8] = 1;
  const RleMask m = RleMask::from_cells(cells);
  ASSERT_EQ(m.runs().size(), 2u);
  EXPECT_EQ(m.runs()[0], (cwm::Run{1, 3}));
  EXPECT_EQ(m.runs()[1], (cwm::Run{8, 1}));
  EXPECT_EQ(m.area(), 4);
  EXPECT_TRUE(m.well_formed({4, 4}));
  EXPECT_EQ(RleMask::from_offsets({8, 3, 1, 2, 2}), m);
}

TEST(Rle, MalformedRunsDetected) {
  EXPECT_FALSE(RleMask::from_runs({{4, 2}, {1, 1}}).well_formed({4, 4}));
  EXPECT_FALSE(RleMask::from_runs({{1, 2}, {3, 1}}).well_formed({4, 4}));
  EXPECT_FALSE(RleMask::from_runs({{14, 3}}).well_formed({4, 4}));
  EXPECT_FALSE(RleMask::from_runs({{0, 0}}).well_formed({4, 4}));
}

TEST(Rle, SetAlgebraAgainstCellwiseOracle) {
  std::mt19937_64 rng(5);
  const GridSize grid{12, 9};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::uint8_t> a(grid.cells()), b(grid.cells());
    for (auto& c : a) c = rng() % 3 == 0;
    for (auto& c : b) c = rng() % 2 == 0;
    const RleMask ma = RleMask::from_cells(a), mb = RleMask::from_cells(b);
    std::vector<std::uint8_t> u(a.size()), i(a.size()), s(a.size());
    std::int64_t inter = 0, uni = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      u[k] = a[k] || b[k];
      i[k] = a[k] && b[k];
      s[k] = a[k] && !b[k];
      inter += i[k];
      uni += u[k];
    }
    EXPECT_EQ(ma.united(mb), RleMask::from_cells(u));
    EXPECT_EQ(ma.intersected(mb), RleMask::from_cells(i));
    EXPECT_EQ(ma.subtracted(mb), RleMask::from_cells(s));
    EXPECT_DOUBLE_EQ(iou(ma, mb), uni == 0 ? 1.0 : static_cast<double>(inter) / uni);
  }
}

TEST(Rle, CentroidAndBox) {
  const GridSize grid{64, 64};
  const RleMask m = rasterize(Shape::kRectangle, 11.5, 11.5, 4, 4, grid);
  EXPECT_EQ(m.area(), 16);
  EXPECT_EQ(m.centroid(grid).x, 11.5);
  EXPECT_EQ(m.centroid(grid).y, 11.5);
  const CellBox box = m.bbox(grid);
  EXPECT_EQ(box.x0, 10);
  EXPECT_EQ(box.y0, 10);
  EXPECT_EQ(box.w, 4);
  EXPECT_EQ(box.h, 4);
  EXPECT_EQ(m.translated(2, 0, grid), rasterize(Shape::kRectangle, 13.5, 11.5, 4, 4, grid));
}

// --- codec -----------------------------------------------------------------------

TEST(Codec, GoldenEmptyTwin) {
  TwinSequence empty;
  empty.frame_range = {0, 0};
  finalize_twin(empty);
  const std::string golden =
      R"({"twin_version":"1","summary":"scene with 0 objects","spatial_summary":"no objects","grid":[64,64],)"
      R"("frame_range":[0,0],"major_elements":[]})";
  EXPECT_EQ(serialize_twin(empty), golden);
  EXPECT_EQ(parse_twin(golden), empty);
}

TEST(Codec, MinimalDocument) {
  const std::string doc =
      R"({"twin_version":"1","summary":"s","spatial_summary":"m","grid":[16,16],"frame_range":[0,0],)"
      R"("major_elements":[{"id":1,"category":"rectangle","attributes":"red rectangle",)"
      R"("frame_captions":["red rectangle at center"],"area_trace":[16.0000],"depth_trace":[0.0000],)"
      R"("centroid_trace":[[5.5000,5.5000]],"records":[{"frame":0,"x":5.5000,"y":5.5000,"z":0.0000,)"
      R"("w":4.0000,"h":4.0000,"mask":[[68,4],[84,4],[100,4],[116,4]]}]}]})";
  const TwinSequence twin = parse_twin(doc);
  EXPECT_EQ(twin.frame_range.first, 0);
  EXPECT_EQ(twin.frame_range.last, 0);
  ASSERT_EQ(twin.elements.size(), 1u);
  EXPECT_EQ(twin.elements[0].records.size(), 1u);
  EXPECT_EQ(twin.elements[0].centroid_trace.size(), 1u);
  EXPECT_EQ(serialize_twin(twin), doc);
}

TEST(Codec, DuplicateIdRejected) {
  TwinSequence twin = moving_square(1, {5.5, 5.5}, {0, 0}, {16, 16});
  ObjectTrace copy = twin.elements[0];
  copy.attributes = "blue rectangle";
  twin.elements.push_back(copy);
  std::string text;
  try {
    serialize_twin(twin);
    FAIL() << "serialize accepted duplicate ids";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kInvariant);
    EXPECT_NE(std::string(e.what()).find("id 1"), std::string::npos);
  }
  auto doc = nlohmann::json::parse(serialize_twin(moving_square(1, {5.5, 5.5}, {0, 0}, {16, 16})));
  doc["major_elements"].push_back(doc["major_elements"][0]);
  try {
    parse_twin(doc.dump());
    FAIL() << "parse accepted duplicate ids";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kInvariant);
    EXPECT_NE(std::string(e.what()).find("id 1"), std::string::npos);
  }
}

TEST(Codec, SchemaErrorsCarryPaths) {
  try {
    parse_twin(R"({"twin_version":"1"})");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_FALSE(e.path().empty());
  }
  EXPECT_THROW(parse_twin("{not json"), Error);
  auto doc = nlohmann::json::parse(serialize_twin(moving_square(2, {5.5, 5.5}, {1, 0})));
  doc["twin_version"] = "2";
  EXPECT_THROW(parse_twin(doc.dump()), Error);
}

TEST(Codec, SimulatedSceneRoundTrip) {
  ScenarioSpec spec;
  spec.seed = 17;
  spec.objects_min = spec.objects_max = 3;
  const TwinSequence twin = twin_from_world(simulate(generate_scenario(spec), 15));
  ASSERT_EQ(twin.elements.size(), 3u);
  const std::string a = serialize_twin(twin);
  EXPECT_EQ(a, serialize_twin(twin));
  EXPECT_EQ(parse_twin(a), twin);
}

TEST(Codec, CondensedRoundTrip) {
  const TwinSequence twin = twin_from_world(seeded_states(4, 16));
  const CondensedTwin c = condense(twin, 0.5);
  const std::string text = serialize_condensed(c);
  EXPECT_EQ(parse_condensed(text), c);
  EXPECT_EQ(serialize_condensed(parse_condensed(text)), text);
}

// --- validation ------------------------------------------------------------------

TEST(Validate, ValidTwinHasNoViolations) {
  EXPECT_TRUE(validate(moving_square(5, {10, 10}, {1, 0})).empty());
  EXPECT_TRUE(validate(twin_from_world(seeded_states(1, 16))).empty());
}

TEST(Validate, CentroidDisplaced) {
  TwinSequence twin = moving_square(3, {10, 10}, {1, 0});
  twin.elements[0].records[1].spatial.x += 2.0;
  rebuild_traces(twin.elements[0], twin.grid);
  const auto v = validate(twin);
  ASSERT_TRUE(has_code(v, "CENTROID_MISMATCH"));
  for (const Violation& x : v) {
    if (x.code == "CENTROID_MISMATCH") {
      EXPECT_NE(x.message.find("element 1"), std::string::npos);
    }
  }
}

TEST(Validate, TraceLength) {
  TwinSequence twin = moving_square(3, {10, 10}, {1, 0});
  twin.elements[0].area_trace.push_back(16.0);
  EXPECT_TRUE(has_code(validate(twin), "TRACE_LENGTH"));
}

TEST(Validate, ConstructedViolations) {
  TwinSequence gap = moving_square(4, {10, 10}, {1, 0});
  gap.elements[0].records.erase(gap.elements[0].records.begin() + 1);
  rebuild_traces(gap.elements[0], gap.grid);
  EXPECT_TRUE(has_code(validate(gap), "PRESENCE_GAP"));

  TwinSequence out = moving_square(2, {10, 10}, {1, 0});
  out.frame_range = {0, 0};
  EXPECT_TRUE(has_code(validate(out), "RECORD_OUT_OF_RANGE"));

  TwinSequence bad_mask = moving_square(1, {10, 10}, {0, 0});
  bad_mask.elements[0].records[0].mask = RleMask::from_runs({{10, 2}, {5, 1}});
  EXPECT_TRUE(has_code(validate(bad_mask), "MASK_MALFORMED"));

  TwinSequence empty_mask = moving_square(1, {10, 10}, {0, 0});
  empty_mask.elements[0].records[0].mask = RleMask{};
  rebuild_traces(empty_mask.elements[0], empty_mask.grid);
  EXPECT_TRUE(has_code(validate(empty_mask), "MASK_EMPTY"));

  TwinSequence range;
  range.frame_range = {3, 1};
  EXPECT_TRUE(has_code(validate(range), "FRAME_RANGE"));
}

// --- RDP ------------------------------------------------------------------------

TEST(Rdp, StraightLineCollapsesToEndpoints) {
  std::vector<MotionKeypoint> pts;
  for (int f = 0; f < 20; ++f) pts.push_back({f, 3.0 + 0.75 * f, 40.0 - 1.25 * f});
  const auto out = simplify_rdp(pts, 0.5);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out.front(), pts.front());
  EXPECT_EQ(out.back(), pts.back());
}

TEST(Rdp, StationaryKeepsBothEndpoints) {
  std::vector<MotionKeypoint> pts;
  for (int f = 0; f < 10; ++f) pts.push_back({f, 7.0, 7.0});
  const auto out = simplify_rdp(pts, 0.5);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out.front().x, out.back().x);
  EXPECT_EQ(out.front().y, out.back().y);
}

TEST(Rdp, LShapeKeepsCorner) {
  std::vector<MotionKeypoint> pts;
  for (int f = 0; f <= 10; ++f) pts.push_back({f, 10.0 + f, 10.0});
  for (int f = 11; f <= 20; ++f) pts.push_back({f, 20.0, 10.0 + (f - 10)});
  const auto out = simplify_rdp(pts, 0.1);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[1].frame, 10);
  EXPECT_EQ(out, reference_simplify(pts, 0.1));
}

TEST(Rdp, MatchesReferenceOnRandomPaths) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> step(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<MotionKeypoint> pts;
    double x = 30, y = 30;
    const int n = 2 + static_cast<int>(rng() % 30);
    for (int f = 0; f < n; ++f) {
      pts.push_back({f, x, y});
      x += step(rng);
      y += step(rng);
    }
    for (double eps : {0.1, 0.5, 2.0}) EXPECT_EQ(simplify_rdp(pts, eps), reference_simplify(pts, eps));
  }
}

TEST(Rdp, SynchronizedDistanceUsesTime) {
  // Same spatial line, uneven timing: the middle point is off its synchronized position.
  const std::vector<MotionKeypoint> pts{{0, 0.0, 0.0}, {1, 9.0, 0.0}, {10, 10.0, 0.0}};
  EXPECT_EQ(simplify_rdp(pts, 0.5).size(), 3u);
}

// --- condense / expand -----------------------------------------------------------

TEST(Condense, StraightLineReconstructsExactly) {
  const TwinSequence twin = moving_square(20, {10, 10}, {1.5, 0.75});
  const CondensedTwin c = condense(twin, 0.5);
  ASSERT_EQ(c.elements[0].motion_keypoints.size(), 2u);
  const TwinSequence back = expand(c, twin.frame_range);
  ASSERT_EQ(back.elements[0].records.size(), twin.elements[0].records.size());
  for (std::size_t i = 0; i < twin.elements[0].records.size(); ++i) {
    EXPECT_EQ(back.elements[0].records[i].spatial, twin.elements[0].records[i].spatial);
    EXPECT_EQ(back.elements[0].records[i].mask, twin.elements[0].records[i].mask);
  }
}

TEST(Condense, SingleFrameIdentity) {
  const TwinSequence twin = moving_square(1, {10, 10}, {0, 0});
  const TwinSequence back = expand(condense(twin, 0.5), twin.frame_range);
  EXPECT_EQ(back, twin);
}

TEST(Condense, DeviationBoundedByEpsilon) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const TwinSequence twin = twin_from_world(seeded_states(seed, 24));
    for (double eps : {0.25, 0.5, 1.0}) {
      const TwinSequence back = expand(condense(twin, eps), twin.frame_range);
      for (const ObjectTrace& e : twin.elements) {
        const ObjectTrace* x = back.find(e.id);
        ASSERT_NE(x, nullptr);
        for (std::size_t i = 0; i < e.records.size(); ++i) {
          EXPECT_LE(std::hypot(e.records[i].spatial.x - x->records[i].spatial.x,
                               e.records[i].spatial.y - x->records[i].spatial.y),
                    eps + 1e-12);
        }
      }
    }
  }
}

TEST(Condense, RejectsNonPositiveEpsilon) {
  const TwinSequence twin = moving_square(3, {10, 10}, {1, 0});
  EXPECT_THROW(condense(twin, 0.0), Error);
  EXPECT_THROW(condense(twin, std::nan("")), Error);
}

TEST(Condense, SpansAndLabels) {
  const TwinSequence twin = moving_square(30, {4, 4}, {2, 0});
  const CondensedElement e = condense(twin, 0.5).elements[0];
  EXPECT_EQ(e.area_span.min, 16.0);
  EXPECT_EQ(e.area_span.max, 16.0);
  ASSERT_TRUE(e.size.has_value());
  EXPECT_EQ(e.size->first, 4.0);
  EXPECT_GE(e.region_labels.size(), 2u);
}

// --- diff -----------------------------------------------------------------------

TEST(Diff, SelfIsEmpty) {
  const TwinSequence twin = twin_from_world(seeded_states(2, 16));
  EXPECT_TRUE(diff_twins(twin, twin).empty());
}

TEST(Diff, RemovedElement) {
  ScenarioSpec spec;
  spec.seed = 3;
  spec.objects_min = spec.objects_max = 4;
  const TwinSequence twin = twin_from_world(simulate(generate_scenario(spec), 10));
  TwinSequence without = twin;
  without.elements.erase(std::remove_if(without.elements.begin(), without.elements.end(),
                                        [](const ObjectTrace& e) { return e.id == 3; }),
                         without.elements.end());
  finalize_twin(without);
  const TwinDiff d = diff_twins(twin, without, DiffOptions{0.0, true});
  EXPECT_EQ(d.removed, std::vector<int>{3});
  EXPECT_TRUE(d.added.empty());
  EXPECT_TRUE(d.changed.empty());
}

TEST(Diff, SetMotionChangesOnlyFromTheInterventionFrame) {
  const auto states = seeded_states(6, 20);
  const TwinSequence factual = twin_from_world(states);
  const int id = states[0].objects.front().id;
  Intervention iv;
  iv.kind = InterventionKind::kSetMotion;
  iv.target_id = id;
  iv.at_frame = 5;
  iv.velocity = Vec2{0.0, -2.0};
  MotionMap motion;
  for (const SimObject& o : states[5].objects) motion[o.id] = o.velocity;
  PropagateOptions options;
  options.motion = motion;
  const CounterfactualTwin cf = propagate(factual, iv, 15, options);
  const TwinDiff d = diff_twins(crop_twin(factual, {5, 20}), cf.twin, DiffOptions{0.0, true});
  ASSERT_EQ(d.changed.size(), 1u);
  EXPECT_EQ(d.changed[0].id, id);
  ASSERT_FALSE(d.changed[0].frames.empty());
  for (const FrameDelta& f : d.changed[0].frames) EXPECT_GT(f.frame, 5);

  // Oracle side: the deltas equal the simulator's positional differences.
  const auto oracle = simulate(apply_world_edit(states[5], iv), 15);
  for (const FrameDelta& f : d.changed[0].frames) {
    const Vec2 a = states[static_cast<std::size_t>(f.frame)].find(id)->position;
    const Vec2 b = oracle[static_cast<std::size_t>(f.frame - 5)].find(id)->position;
    EXPECT_NEAR(f.dx, b.x - a.x, 1e-9);
    EXPECT_NEAR(f.dy, b.y - a.y, 1e-9);
  }
}

TEST(Templates, RegionLabelsAndSummaries) {
  const GridSize grid{64, 64};
  EXPECT_EQ(region_label(32, 32, grid), "center");
  EXPECT_NE(region_label(2, 2, grid), "center");
  const TwinSequence twin = moving_square(2, {10, 10}, {0, 0});
  EXPECT_NE(twin.summary.find("red rectangle"), std::string::npos);
  EXPECT_NE(twin.spatial_summary.find("stays"), std::string::npos);
}
