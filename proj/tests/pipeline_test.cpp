#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>
#include <thread>

#include "httplib.h"

#include "cwm/image/ppm.hpp"
#include "cwm/pipeline/cli.hpp"
#include "cwm/pipeline/config.hpp"
#include "cwm/pipeline/export.hpp"
#include "cwm/pipeline/run.hpp"
#include "cwm/pipeline/service.hpp"
#include "cwm/pipeline/store.hpp"
#include "cwm/twin/codec.hpp"
#include "support.hpp"

using namespace cwm;
using namespace cwm::testing;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

/// Fresh directory removed at scope exit.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("cwm-test-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

RunConfig small_config() {
  RunConfig c;
  c.horizon = 6;
  c.samples = 2;
  return c;
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "cwmdt");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

json poll_done(httplib::Client& client, const std::string& id) {
  for (int i = 0; i < 600; ++i) {
    const auto res = client.Get("/runs/" + id);
    if (!res) break;
    json body = json::parse(res->body);
    if (body["status"] == "done" || body["status"] == "failed") return body;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  return {};
}

}  // namespace

// --- config ------------------------------------------------------------------------

TEST(Config, DefaultsAndKeys) {
  const RunConfig c = load_run_config("");
  EXPECT_EQ(c.horizon, 16);
  EXPECT_EQ(c.samples, 3);
  EXPECT_EQ(c.epsilon, 0.5);
  EXPECT_EQ(c.consistency_threshold, 0.9);
  const RunConfig d = load_run_config("run.horizon = 8\nrun.samples = 5\nllm.endpoint = http://127.0.0.1:9/edit\n"
                                      "style.background = 10,20,30\nservice.port = 81\n");
  EXPECT_EQ(d.horizon, 8);
  EXPECT_EQ(d.samples, 5);
  EXPECT_EQ(d.llm.samples, 5);
  EXPECT_EQ(d.llm.endpoint, "http://127.0.0.1:9/edit");
  EXPECT_EQ(d.style.background, (Rgb{10, 20, 30}));
}

TEST(Config, SnapshotRoundTrips) {
  const RunConfig c = load_run_config("run.horizon = 4\nrun.seed = 9\nsynthesize.backend = diffusion\n");
  const RunConfig again = load_run_config(run_config_text(c));
  EXPECT_EQ(run_config_text(again), run_config_text(c));
  EXPECT_EQ(again.synthesize_backend, SynthesisBackend::kDiffusion);
}

TEST(Config, EnvironmentOverridesFile) {
  ::setenv("CWMDT_RUN_HORIZON", "3", 1);
  ::setenv("CWMDT_SERVICE_MAX_RUNS", "5", 1);
  const RunConfig c = load_run_config("run.horizon = 8\n");
  const ServiceConfig s = load_service_config("service.max_runs = 1\n");
  ::unsetenv("CWMDT_RUN_HORIZON");
  ::unsetenv("CWMDT_SERVICE_MAX_RUNS");
  EXPECT_EQ(c.horizon, 3);
  EXPECT_EQ(s.max_runs, 5);
}

TEST(Config, BadValuesRejected) {
  EXPECT_THROW(load_run_config("run.samples = 0\n"), Error);
  EXPECT_THROW(load_run_config("run.epsilon = -1\n"), Error);
  EXPECT_THROW(load_run_config("run.horizon = soon\n"), Error);
  EXPECT_THROW(load_run_config("intervene.backend = oracle\n"), Error);
  EXPECT_THROW(load_run_config("style.scale = 2\n"), Error);
  EXPECT_THROW(load_run_config("style.background = 1,2\n"), Error);
  EXPECT_THROW(run_config_from_key_values({{"run.whatever", "1"}}), Error);
  EXPECT_THROW(load_service_config("service.max_runs = 0\n"), Error);
}

// --- run ---------------------------------------------------------------------------

TEST(Run, RemoveSucceeds) {
  const RunResult r = run_counterfactual(seeded_spec(4), "REMOVE id=2 AT t=0", small_config());
  EXPECT_EQ(r.input_kind, "scenario");
  ASSERT_EQ(r.reports.size(), 2u);
  for (const EvalReport& rep : r.reports) {
    EXPECT_EQ(rep.intervention_success, 1.0);
    EXPECT_EQ(rep.frames, 7);
  }
  EXPECT_EQ(r.factual_video.frames.size(), 7u);
  EXPECT_EQ(r.edited_first_frames.size(), 2u);
  EXPECT_TRUE(r.warnings.empty());
  for (const char* stage : {"parse", "simulate", "perceive", "condense", "intervene", "edit", "synthesize", "evaluate"}) {
    EXPECT_TRUE(r.timings.count(stage)) << stage;
  }
}

TEST(Run, NullIsIdentity) {
  RunConfig c = small_config();
  c.samples = 1;
  const RunResult r = run_counterfactual(seeded_spec(6), "NULL", c);
  ASSERT_EQ(r.videos.size(), 1u);
  EXPECT_EQ(r.videos[0].frames, r.factual_video.frames);
  EXPECT_EQ(r.reports[0].psnr_mean, kPsnrCap);
}

TEST(Run, VideoInputMatchesScenarioInput) {
  const RunConfig c = small_config();
  const RunResult a = run_counterfactual(seeded_spec(4), "FREEZE id=1 AT t=1", c);
  const RunResult b = run_counterfactual(a.factual_video, "FREEZE id=1 AT t=1", c);
  EXPECT_EQ(b.input_kind, "video");
  EXPECT_EQ(b.factual_twin, a.factual_twin);
  ASSERT_EQ(b.videos.size(), a.videos.size());
  EXPECT_EQ(b.videos[0].frames, a.videos[0].frames);
}

TEST(Run, FreeTextWithoutLlmFailsInIntervene) {
  try {
    run_counterfactual(seeded_spec(4), "make the red one disappear", small_config());
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "intervene");
    EXPECT_EQ(e.code(), Errc::kConfig);
  }
}

TEST(Run, ErrorsNameTheirStage) {
  try {
    run_counterfactual(seeded_spec(4), "REMOVE id= AT t=0", small_config());
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "parse");
    EXPECT_EQ(e.code(), Errc::kParse);
  }
  try {
    run_counterfactual(seeded_spec(4), "REMOVE id=99 AT t=0", small_config());
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "intervene");
  }
}

TEST(Run, SerializationIsDeterministic) {
  const RunResult a = run_counterfactual(seeded_spec(5), "SET id=1 velocity=(1,1) AT t=2", small_config());
  const RunResult b = run_counterfactual(seeded_spec(5), "SET id=1 velocity=(1,1) AT t=2", small_config());
  EXPECT_EQ(serialize_run(a), serialize_run(b));
  EXPECT_EQ(serialize_run(a).find("timings"), std::string::npos);
}

// --- store -------------------------------------------------------------------------

TEST(Store, SaveAndReloadInAFreshProcess) {
  TempDir dir;
  RunResult r = run_counterfactual(seeded_spec(3), "REMOVE id=1 AT t=1", small_config());
  std::string id;
  {
    SessionStore store(dir.path());
    id = store.save(r);
    EXPECT_EQ(id, "run-000001");
  }
  SessionStore reopened(dir.path());
  ASSERT_TRUE(reopened.contains(id));
  const RunResult back = reopened.load(id);
  EXPECT_EQ(serialize_run(back), serialize_run(r));
  EXPECT_EQ(back.videos, r.videos);
  EXPECT_EQ(back.edited_first_frames, r.edited_first_frames);
  EXPECT_EQ(reopened.load_document(id), serialize_run(r));
  EXPECT_EQ(reopened.allocate_id(), "run-000002");
}

TEST(Store, TombstonesSurviveReload) {
  TempDir dir;
  RunResult r = run_counterfactual(seeded_spec(3), "NULL", small_config());
  {
    SessionStore store(dir.path());
    store.save(r);
    store.remove(r.run_id);
    EXPECT_FALSE(store.contains(r.run_id));
    EXPECT_THROW(store.remove(r.run_id), Error);
  }
  SessionStore reopened(dir.path());
  EXPECT_FALSE(reopened.contains(r.run_id));
  EXPECT_TRUE(reopened.run_ids().empty());
  try {
    reopened.load(r.run_id);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kNotFound);
  }
}

TEST(Store, ObjectsAreContentAddressedAndVerified) {
  TempDir dir;
  SessionStore store(dir.path());
  const std::string hash = store.put("hello");
  EXPECT_EQ(hash, sha256_hex("hello"));
  EXPECT_EQ(store.put("hello"), hash);
  EXPECT_EQ(store.get(hash), "hello");
  write_text_file((dir.path() / "objects" / hash).string(), "tampered");
  try {
    store.get(hash);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kInvariant);
  }
  EXPECT_THROW(store.get(std::string(64, '0')), Error);
}

TEST(Export, ManifestListsEveryFile) {
  TempDir dir;
  RunResult r = run_counterfactual(seeded_spec(2), "REMOVE id=1 AT t=0", small_config());
  r.run_id = "run-000007";
  export_run(r, dir.path());
  const KeyValues manifest = parse_key_values(read_text_file((dir.path() / "manifest.txt").string()));
  EXPECT_EQ(manifest.at("run_id"), "run-000007");
  EXPECT_EQ(manifest.at("samples"), "2");
  int files = 0;
  for (const auto& [key, hash] : manifest) {
    if (key.rfind("file.", 0) != 0) continue;
    ++files;
    EXPECT_EQ(sha256_hex(read_text_file((dir.path() / key.substr(5)).string())), hash) << key;
  }
  EXPECT_EQ(files, 1 + 1 + 2 * 4);
  EXPECT_EQ(read_video(dir.path() / "sample-1").frames, r.videos[1].frames);
  EXPECT_EQ(manifest.at("video.sample-1"), sha256_hex(encode_ppm_stream(r.videos[1].frames)));
}

// --- service -----------------------------------------------------------------------

class ServiceTest : public ::testing::Test {
 protected:
  void start(const std::string& token = "", const std::string& llm_endpoint = "") {
    ServiceConfig sc;
    sc.port = 0;
    sc.store = (dir_.path() / "store").string();
    sc.token = token;
    RunConfig defaults = small_config();
    defaults.llm.endpoint = llm_endpoint;
    service_ = std::make_unique<Service>(sc, defaults);
    port_ = service_->start();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    if (!token.empty()) client_->set_bearer_token_auth(token);
  }

  std::string scenario(int seed) {
    const auto res = client_->Post("/scenarios", "seed=" + std::to_string(seed), "text/plain");
    EXPECT_EQ(res->status, 201);
    return json::parse(res->body)["scenario_id"];
  }

  TempDir dir_;
  std::unique_ptr<Service> service_;
  std::unique_ptr<httplib::Client> client_;
  int port_ = 0;
};

TEST_F(ServiceTest, RunLifecycle) {
  start();
  const std::string scn = scenario(4);
  auto res = client_->Post("/runs", json{{"scenario_id", scn}, {"intervention", "REMOVE id=2 AT t=0"}}.dump(),
                           "application/json");
  ASSERT_EQ(res->status, 202);
  const std::string id = json::parse(res->body)["run_id"];
  const json done = poll_done(*client_, id);
  ASSERT_EQ(done["status"], "done");
  EXPECT_EQ(done["reports"].size(), 2u);
  EXPECT_EQ(done["reports"][0]["intervention_success"], 1.0);

  res = client_->Get("/runs/" + id + "/twins/0");
  ASSERT_EQ(res->status, 200);
  EXPECT_NO_THROW(parse_twin(res->body));
  res = client_->Get("/runs/" + id + "/videos/0/frames/3");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(decode_ppm(res->body).width, 64);
  EXPECT_EQ(client_->Get("/runs/" + id + "/videos/0/frames/99")->status, 404);
  EXPECT_EQ(client_->Get("/runs/" + id + "/twins/7")->status, 404);

  res = client_->Delete("/runs/" + id);
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)["status"], "deleted");
  res = client_->Get("/runs/" + id);
  EXPECT_EQ(res->status, 404);
  EXPECT_EQ(json::parse(res->body)["error"]["code"], "UNKNOWN_RUN");
  EXPECT_EQ(client_->Delete("/runs/" + id)->status, 404);
}

TEST_F(ServiceTest, BadRequestsGet400) {
  start();
  const std::string scn = scenario(4);
  auto res = client_->Post("/runs", json{{"scenario_id", scn}, {"intervention", "REMOVE id= AT t=5"}}.dump(),
                           "application/json");
  ASSERT_EQ(res->status, 400);
  const json body = json::parse(res->body);
  EXPECT_EQ(body["error"]["code"], "ParseError");
  EXPECT_EQ(body["error"]["offset"], 10);
  EXPECT_EQ(client_->Post("/runs", "not json", "application/json")->status, 400);
  EXPECT_EQ(client_->Post("/runs", json{{"intervention", "NULL"}}.dump(), "application/json")->status, 400);
  EXPECT_EQ(client_->Post("/runs", json{{"scenario_id", scn}, {"intervention", "NULL"}, {"config", {{"bogus", 1}}}}.dump(),
                          "application/json")
                ->status,
            400);
  EXPECT_EQ(client_->Post("/scenarios", "objects=-1", "text/plain")->status, 400);
  res = client_->Post("/runs", json{{"scenario_id", "scn-missing"}, {"intervention", "NULL"}}.dump(), "application/json");
  EXPECT_EQ(res->status, 404);
  EXPECT_EQ(json::parse(res->body)["error"]["code"], "UNKNOWN_SCENARIO");
}

TEST_F(ServiceTest, FailedRunReportsStageAnd409) {
  start();
  const std::string scn = scenario(4);
  const auto res = client_->Post("/runs", json{{"scenario_id", scn}, {"intervention", "REMOVE id=99 AT t=0"}}.dump(),
                                 "application/json");
  ASSERT_EQ(res->status, 202);
  const std::string id = json::parse(res->body)["run_id"];
  const json done = poll_done(*client_, id);
  ASSERT_EQ(done["status"], "failed");
  EXPECT_EQ(done["error"]["stage"], "intervene");
  const auto twin = client_->Get("/runs/" + id + "/twins/0");
  EXPECT_EQ(twin->status, 409);
  EXPECT_EQ(json::parse(twin->body)["error"]["code"], "RUN_FAILED");
}

TEST_F(ServiceTest, BearerTokenRequired) {
  start("sesame");
  httplib::Client anonymous("127.0.0.1", port_);
  const auto res = anonymous.Get("/runs/run-000001");
  ASSERT_EQ(res->status, 401);
  EXPECT_EQ(json::parse(res->body)["error"]["code"], "UNAUTHORIZED");
  EXPECT_EQ(client_->Get("/runs/run-000001")->status, 404);
}

TEST_F(ServiceTest, UploadedVideoRuns) {
  start();
  const Video v = render_states(seeded_states(4, 6));
  auto res = client_->Post("/videos", encode_ppm_stream(v.frames), "image/x-portable-pixmap");
  ASSERT_EQ(res->status, 201);
  const json up = json::parse(res->body);
  EXPECT_EQ(up["frames"], 7);
  res = client_->Post("/runs", json{{"video_id", up["video_id"]}, {"intervention", "NULL"}}.dump(), "application/json");
  ASSERT_EQ(res->status, 202);
  EXPECT_EQ(poll_done(*client_, json::parse(res->body)["run_id"])["status"], "done");
  EXPECT_EQ(client_->Post("/videos", "P6 junk", "image/x-portable-pixmap")->status, 400);
}

TEST_F(ServiceTest, PersistedRunsServeAfterRestart) {
  start();
  const std::string scn = scenario(4);
  auto res = client_->Post("/runs", json{{"scenario_id", scn}, {"intervention", "NULL"}}.dump(), "application/json");
  const std::string id = json::parse(res->body)["run_id"];
  ASSERT_EQ(poll_done(*client_, id)["status"], "done");
  const std::string before = client_->Get("/runs/" + id + "/twins/factual")->body;
  client_.reset();
  service_.reset();
  start();
  res = client_->Get("/runs/" + id);
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)["status"], "done");
  EXPECT_EQ(client_->Get("/runs/" + id + "/twins/factual")->body, before);
}

TEST_F(ServiceTest, RecordedUiRequestsAreAccepted) {
  StubServer llm([](const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body);
    res.set_content(json{{"condensed_twin", body["condensed_twin"]}}.dump(), "application/json");
  });
  start("", llm.endpoint());
  const fs::path fixtures = fs::path(CWM_SOURCE_DIR) / "tests" / "fixtures" / "ui";
  auto res = client_->Post("/scenarios", read_text_file((fixtures / "scenario.request.txt").string()), "text/plain");
  ASSERT_EQ(res->status, 201);
  const json scn = json::parse(res->body);
  EXPECT_TRUE(scn["spec"].is_string());
  const std::string scenario_id = scn["scenario_id"];
  for (const char* name : {"remove", "replace", "natural"}) {
    std::string body = read_text_file((fixtures / (std::string(name) + ".request.json")).string());
    body.replace(body.find("{scenario_id}"), 13, scenario_id);
    res = client_->Post("/runs", body, "application/json");
    ASSERT_EQ(res->status, 202) << name << ": " << res->body;
    const json done = poll_done(*client_, json::parse(res->body)["run_id"]);
    ASSERT_EQ(done["status"], "done") << name << ": " << done.dump();
    ASSERT_EQ(done["reports"].size(), 3u) << name;
    ASSERT_EQ(done["links"]["videos"].size(), 3u) << name;
    EXPECT_EQ(done["links"]["factual_video"]["frames"], 9) << name;
    for (const json& rep : done["reports"]) {
      EXPECT_TRUE(rep.contains("grounding_iou"));
      if (std::string(name) == "natural") EXPECT_TRUE(rep["intervention_success"].is_null());
      else EXPECT_EQ(rep["intervention_success"], 1.0) << name;
    }
  }
  EXPECT_EQ(llm.requests(), 3);
}

// --- CLI ---------------------------------------------------------------------------

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli({"--help"}).code, 0);
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  EXPECT_EQ(cli({"perceive", "--out", "x.json"}).code, 2);
  const CliResult missing = cli({"perceive", "--video", "/nonexistent/dir", "--out", "/tmp/never.json"});
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("error"), std::string::npos);
}

TEST(Cli, SimulatePerceiveRoundTrip) {
  TempDir dir;
  const std::string frames = (dir.path() / "frames").string();
  const std::string gt = (dir.path() / "gt.json").string();
  const std::string seen = (dir.path() / "seen.json").string();
  EXPECT_EQ(cli({"simulate", "--seed", "3", "--frames", "5", "--out", frames, "--twin", gt}).code, 0);
  EXPECT_EQ(read_video(frames).frames.size(), 5u);
  const CliResult p = cli({"perceive", "--video", frames, "--out", seen});
  EXPECT_EQ(p.code, 0) << p.err;
  EXPECT_EQ(cli({"validate-twin", seen}).code, 0);
  EXPECT_EQ(parse_twin(read_text_file(seen)).elements.size(), parse_twin(read_text_file(gt)).elements.size());
}

TEST(Cli, RunWritesExportAndStore) {
  TempDir dir;
  const std::string out = (dir.path() / "run").string();
  const CliResult r = cli({"run", "--seed", "4", "--intervention", "REMOVE id=2 AT t=0", "-k", "4", "-n", "1", "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("intervention_success=1"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir.path() / "run" / "manifest.txt"));
  EXPECT_TRUE(fs::exists(dir.path() / "run" / "sample-0.report.txt"));
  SessionStore store(dir.path() / "run" / "store");
  EXPECT_EQ(store.run_ids().size(), 1u);
}

TEST(Cli, GoldenRun) {
  TempDir dir;
  const std::string out = (dir.path() / "d").string();
  const CliResult r = cli({"run", "--seed", "7", "--intervention", "REMOVE id=1 AT t=0", "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  const KeyValues manifest = parse_key_values(read_text_file((dir.path() / "d" / "manifest.txt").string()));
  EXPECT_EQ(manifest.at("samples"), "3");
  EXPECT_EQ(manifest.at("intervention"), "REMOVE id=1 AT t=0");
  const CliResult again = cli({"run", "--seed", "7", "--intervention", "REMOVE id=1 AT t=0", "--out", out + "2"});
  ASSERT_EQ(again.code, 0);
  EXPECT_EQ(read_text_file((dir.path() / "d" / "run.json").string()),
            read_text_file((dir.path() / "d2" / "run.json").string()));
}

TEST(Cli, DomainErrorsExitOne) {
  TempDir dir;
  const std::string out = (dir.path() / "run").string();
  const CliResult bad = cli({"run", "--seed", "4", "--intervention", "REMOVE id= AT t=0", "--out", out});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("parse"), std::string::npos);
  const CliResult natural = cli({"run", "--seed", "4", "--intervention", "make it blue", "--out", out});
  EXPECT_EQ(natural.code, 1);
  EXPECT_NE(natural.err.find("intervene"), std::string::npos);
  EXPECT_EQ(cli({"run", "--intervention", "NULL", "--out", out}).code, 2);
}

TEST(Cli, InvalidTwinIsReported) {
  TempDir dir;
  const std::string path = (dir.path() / "bad.json").string();
  write_text_file(path, R"({"twin_version":"1","summary":"","spatial_summary":"","grid":[8,8],"frame_range":[0,0],)"
                        R"("major_elements":[{"id":1,"category":"rectangle","attributes":"red rectangle",)"
                        R"("presence":[0,0],"centroid_trace":[[1,1]],"records":[{"frame":0,"spatial":)"
                        R"({"x":5,"y":5,"z":0,"w":1,"h":1},"mask":[[9,1]]}]}]})");
  const CliResult r = cli({"validate-twin", path});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(r.err.empty());
}
