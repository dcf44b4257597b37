#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cwm/core/error.hpp"
#include "cwm/core/hash.hpp"
#include "cwm/core/key_value.hpp"
#include "cwm/image/ppm.hpp"
#include "cwm/intervene/dsl.hpp"
#include "cwm/intervene/llm_client.hpp"
#include "cwm/intervene/sampling.hpp"
#include "cwm/metrics/report.hpp"
#include "cwm/perception/perceive.hpp"
#include "cwm/pipeline/config.hpp"
#include "cwm/pipeline/export.hpp"
#include "cwm/pipeline/run.hpp"
#include "cwm/pipeline/service.hpp"
#include "cwm/pipeline/store.hpp"
#include "cwm/sim/render.hpp"
#include "cwm/sim/scenario.hpp"
#include "cwm/synth/diffusion_client.hpp"
#include "cwm/synth/render.hpp"
#include "cwm/twin/codec.hpp"
#include "cwm/twin/condense.hpp"
#include "cwm/twin/validate.hpp"

namespace cwm {

inline constexpr std::string_view kDslHelp =
    "Intervention grammar:\n"
    "  REMOVE id=<int> AT t=<int>\n"
    "  FREEZE id=<int> AT t=<int> [FOR <int>]\n"
    "  REPLACE id=<int> WITH [shape=rectangle|circle] [color=<name>|(r,g,b)] [size=WxH] [velocity=(vx,vy)] AT t=<int>\n"
    "  SET id=<int> velocity=(<num>,<num>) AT t=<int>\n"
    "  SET id=<int> attributes=\"<text>\" AT t=<int>\n"
    "  NULL [AT t=<int>]\n"
    "Any other text is a natural-language query and needs llm.endpoint.\n";

namespace detail {

struct CommonRunFlags {
  std::string config_path;
  std::optional<int> horizon;
  std::optional<int> samples;
  std::optional<double> epsilon;
  std::optional<double> threshold;
  std::optional<std::uint64_t> seed;
};

inline RunConfig resolve_run_config(const CommonRunFlags& f) {
  RunConfig c = load_run_config(f.config_path.empty() ? std::string() : read_text_file(f.config_path));
  if (f.horizon) c.horizon = *f.horizon;
  if (f.samples) c.samples = *f.samples;
  if (f.epsilon) c.epsilon = *f.epsilon;
  if (f.threshold) c.consistency_threshold = *f.threshold;
  if (f.seed) c.seed = *f.seed;
  c.llm.samples = c.samples;
  c.llm.seed = c.seed;
  c.diffusion.samples = c.samples;
  c.diffusion.seed = c.seed;
  require_valid(c);
  return c;
}

inline void add_run_flags(CLI::App* cmd, CommonRunFlags& f) {
  cmd->add_option("--config", f.config_path, "key = value config file (CWMDT_* variables override)");
  cmd->add_option("--horizon,-k", f.horizon, "frames predicted after t");
  cmd->add_option("--samples,-n", f.samples, "counterfactual samples");
  cmd->add_option("--epsilon", f.epsilon, "condensation tolerance in cells");
  cmd->add_option("--threshold", f.threshold, "first-frame consistency threshold");
}

inline ScenarioSpec scenario_for(const std::string& spec_path, std::optional<std::uint64_t> seed) {
  KeyValues kv;
  if (!spec_path.empty()) kv = parse_key_values(read_text_file(spec_path));
  if (seed) kv["seed"] = std::to_string(*seed);
  return scenario_from_key_values(kv);
}

inline void write_file(const std::string& path, std::string_view data) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  write_text_file(path, data);
}

}  // namespace detail

/// Command-line entry point. Exit status: 0 success, 1 domain error, 2 usage error.
inline int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app("Counterfactual world-model engine over digital-twin scenes", "cwmdt");
  app.require_subcommand(1);
  app.footer(std::string(kDslHelp));
  std::string background_text = "0,0,0";
  std::function<void()> action;

  // simulate
  auto* simulate_cmd = app.add_subcommand("simulate", "generate a seeded scenario and render its video");
  std::optional<std::uint64_t> sim_seed;
  std::string sim_spec, sim_out, sim_twin, sim_world;
  int sim_frames = 17;
  int sim_scale = 1;
  simulate_cmd->add_option("--seed", sim_seed, "scenario seed");
  simulate_cmd->add_option("--spec", sim_spec, "scenario spec file (key = value)");
  simulate_cmd->add_option("--frames", sim_frames, "frames to render")->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--out", sim_out, "output frame directory")->required();
  simulate_cmd->add_option("--twin", sim_twin, "write the ground-truth twin here");
  simulate_cmd->add_option("--world", sim_world, "write the final world state dump here");
  simulate_cmd->add_option("--scale", sim_scale, "pixels per cell")->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--background", background_text, "background R,G,B");
  simulate_cmd->callback([&] {
    action = [&] {
      const ScenarioSpec spec = detail::scenario_for(sim_spec, sim_seed);
      const auto states = simulate(generate_scenario(spec), sim_frames - 1);
      RenderStyle style{parse_rgb("--background", background_text), sim_scale};
      const Video video = render_states(states, style);
      const TwinSequence twin = twin_from_world(states);
      const std::string twin_text = serialize_twin(twin);
      write_video_dir(sim_out, video, sha256_hex(twin_text));
      if (!sim_twin.empty()) detail::write_file(sim_twin, twin_text);
      if (!sim_world.empty()) detail::write_file(sim_world, dump_world(states.back()));
      out << "wrote " << video.frames.size() << " frames of " << twin.elements.size() << " objects to " << sim_out
          << "\n";
    };
  });

  // perceive
  auto* perceive_cmd = app.add_subcommand("perceive", "recover a twin from a video");
  std::string per_video, per_out;
  perceive_cmd->add_option("--video", per_video, "frame directory or concatenated PPM file")->required();
  perceive_cmd->add_option("--out", per_out, "output twin document")->required();
  perceive_cmd->add_option("--background", background_text, "background R,G,B");
  perceive_cmd->callback([&] {
    action = [&] {
      const TwinSequence twin = perceive(read_video(per_video), parse_rgb("--background", background_text));
      detail::write_file(per_out, serialize_twin(twin));
      out << twin.summary << "\n" << twin.spatial_summary << "\n";
    };
  });

  // intervene
  auto* intervene_cmd = app.add_subcommand("intervene", "apply an intervention to a twin and sample counterfactuals");
  std::string int_twin, int_text, int_out;
  detail::CommonRunFlags int_flags;
  intervene_cmd->add_option("--twin", int_twin, "factual twin document")->required();
  intervene_cmd->add_option("--intervention", int_text, "DSL intervention or free-text query")->required();
  intervene_cmd->add_option("--out", int_out, "output directory for sample-<n>.twin.json")->required();
  intervene_cmd->add_option("--seed", int_flags.seed, "sampling seed");
  detail::add_run_flags(intervene_cmd, int_flags);
  intervene_cmd->callback([&] {
    action = [&] {
      const RunConfig config = detail::resolve_run_config(int_flags);
      const TwinSequence source = parse_twin(read_text_file(int_twin));
      const Intervention intervention = read_intervention(int_text);
      std::vector<CounterfactualTwin> samples;
      if (intervention.kind == InterventionKind::kNatural || config.intervene_backend == Backend::kService) {
        samples = llm_sample_trajectories(source, intervention, config.horizon, config.epsilon, config.llm);
      } else {
        BackendConfig backend;
        backend.samples = config.samples;
        backend.seed = config.seed;
        samples = sample_trajectories(source, intervention, config.horizon, backend);
      }
      std::filesystem::create_directories(int_out);
      for (const CounterfactualTwin& cf : samples) {
        const std::string name = "sample-" + std::to_string(cf.sample) + ".twin.json";
        write_text_file((std::filesystem::path(int_out) / name).string(), serialize_twin(cf.twin));
        out << name << ": " << cf.provenance << "\n";
      }
    };
  });

  // synthesize
  auto* synth_cmd = app.add_subcommand("synthesize", "render a twin to video");
  std::string syn_twin, syn_out, syn_first, syn_backend = "deterministic", syn_config;
  int syn_scale = 1;
  double syn_fps = 24.0;
  synth_cmd->add_option("--twin", syn_twin, "twin document")->required();
  synth_cmd->add_option("--out", syn_out, "output frame directory")->required();
  synth_cmd->add_option("--scale", syn_scale, "pixels per cell")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--fps", syn_fps, "frame rate metadata");
  synth_cmd->add_option("--background", background_text, "background R,G,B");
  synth_cmd->add_option("--backend", syn_backend, "deterministic or diffusion")
      ->check(CLI::IsMember({"deterministic", "diffusion"}));
  synth_cmd->add_option("--first-frame", syn_first, "edited first frame (PPM) for the diffusion backend");
  synth_cmd->add_option("--config", syn_config, "config file with diffusion.endpoint");
  synth_cmd->callback([&] {
    action = [&] {
      const std::string twin_text = read_text_file(syn_twin);
      const TwinSequence twin = parse_twin(twin_text);
      const RenderStyle style{parse_rgb("--background", background_text), syn_scale};
      Video video;
      if (syn_backend == "deterministic") {
        video = render_video(twin, style, syn_fps);
      } else {
        const RunConfig config = load_run_config(syn_config.empty() ? std::string() : read_text_file(syn_config));
        SynthesisRequest request;
        request.first_frame = syn_first.empty() ? render_frame(twin.records_at(twin.frame_range.first), twin.grid, style)
                                                : decode_ppm(read_text_file(syn_first));
        request.twin = condense(twin, config.epsilon);
        request.frames = twin.frame_range.span();
        request.first_frame_index = twin.frame_range.first;
        request.fps = syn_fps;
        video = diffusion_synthesize(request, config.diffusion);
      }
      write_video_dir(syn_out, video, sha256_hex(twin_text));
      out << "wrote " << video.frames.size() << " frames to " << syn_out << "\n";
    };
  });

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "score a video against its twin and intervention");
  std::string ev_video, ev_twin, ev_text, ev_factual, ev_reference, ev_out, ev_csv;
  eval_cmd->add_option("--video", ev_video, "video to score")->required();
  eval_cmd->add_option("--twin", ev_twin, "twin the video was synthesized from")->required();
  eval_cmd->add_option("--intervention", ev_text, "intervention whose intent is checked");
  eval_cmd->add_option("--factual", ev_factual, "factual twin (defaults to --twin)");
  eval_cmd->add_option("--reference", ev_reference, "reference video for psnr/ssim");
  eval_cmd->add_option("--out", ev_out, "report file (stdout when omitted)");
  eval_cmd->add_option("--csv", ev_csv, "per-frame CSV file");
  eval_cmd->add_option("--background", background_text, "background R,G,B");
  eval_cmd->callback([&] {
    action = [&] {
      const Video video = read_video(ev_video);
      const TwinSequence twin = parse_twin(read_text_file(ev_twin));
      const TwinSequence factual = ev_factual.empty() ? twin : parse_twin(read_text_file(ev_factual));
      std::optional<Video> reference;
      if (!ev_reference.empty()) reference = read_video(ev_reference);
      std::optional<Intervention> intervention;
      if (!ev_text.empty()) intervention = read_intervention(ev_text);
      EvalInputs in;
      in.video = &video;
      in.twin = &twin;
      in.factual = &factual;
      in.reference = reference ? &*reference : nullptr;
      in.intervention = intervention ? &*intervention : nullptr;
      in.background = parse_rgb("--background", background_text);
      const EvalReport report = evaluate(in);
      if (ev_out.empty()) out << report_text(report);
      else detail::write_file(ev_out, report_text(report));
      if (!ev_csv.empty()) detail::write_file(ev_csv, report_csv(report));
    };
  });

  // run
  auto* run_cmd = app.add_subcommand("run", "full pipeline: input -> counterfactual videos and reports");
  std::optional<std::uint64_t> run_scenario_seed;
  std::string run_spec, run_video, run_text, run_out, run_store;
  detail::CommonRunFlags run_flags;
  run_cmd->add_option("--seed", run_scenario_seed, "scenario seed; also the sampling seed");
  run_cmd->add_option("--spec", run_spec, "scenario spec file");
  run_cmd->add_option("--video", run_video, "factual video instead of a scenario");
  run_cmd->add_option("--intervention", run_text, "DSL intervention or free-text query")->required();
  run_cmd->add_option("--out", run_out, "output directory")->required();
  run_cmd->add_option("--store", run_store, "session store directory (default <out>/store)");
  detail::add_run_flags(run_cmd, run_flags);
  run_cmd->callback([&] {
    action = [&] {
      const int sources = (run_scenario_seed || !run_spec.empty() ? 1 : 0) + (run_video.empty() ? 0 : 1);
      if (sources != 1) throw CLI::ValidationError("run", "give exactly one of --seed/--spec or --video");
      if (run_scenario_seed) run_flags.seed = run_scenario_seed;
      RunConfig config = detail::resolve_run_config(run_flags);
      RunInput input;
      if (!run_video.empty()) input = read_video(run_video);
      else input = detail::scenario_for(run_spec, run_scenario_seed);
      RunResult result = run_counterfactual(input, run_text, config);
      const std::filesystem::path dir(run_out);
      SessionStore store(run_store.empty() ? dir / "store" : std::filesystem::path(run_store));
      store.save(result);
      export_run(result, dir);
      out << result.run_id << "\n";
      for (const EvalReport& r : result.reports) {
        out << "sample " << r.sample << ": intervention_success="
            << (r.intervention_success ? format_exact(*r.intervention_success) : "none")
            << " grounding_iou=" << format_exact(r.grounding_iou) << " psnr_mean=" << format_exact(r.psnr_mean) << "\n";
      }
      for (const std::string& w : result.warnings) err << "warning: " << w << "\n";
    };
  });

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
  std::string srv_config, srv_host, srv_store;
  std::optional<int> srv_port, srv_max;
  serve_cmd->add_option("--config", srv_config, "config file (run.*, llm.*, diffusion.*, service.* keys)");
  serve_cmd->add_option("--host", srv_host, "bind address");
  serve_cmd->add_option("--port", srv_port, "port (0 picks one)");
  serve_cmd->add_option("--store", srv_store, "session store directory");
  serve_cmd->add_option("--max-runs", srv_max, "concurrent run limit");
  serve_cmd->callback([&] {
    action = [&] {
      const std::string text = srv_config.empty() ? std::string() : read_text_file(srv_config);
      ServiceConfig sc = load_service_config(text);
      if (!srv_host.empty()) sc.host = srv_host;
      if (srv_port) sc.port = *srv_port;
      if (!srv_store.empty()) sc.store = srv_store;
      if (srv_max) sc.max_runs = *srv_max;
      Service service(sc, load_run_config(text));
      const int port = service.start();
      out << "listening on " << sc.host << ":" << port << std::endl;
      service.wait();
    };
  });

  // validate-twin
  auto* validate_cmd = app.add_subcommand("validate-twin", "check a twin document");
  std::string val_path;
  bool val_condensed = false;
  validate_cmd->add_option("file", val_path, "twin document")->required();
  validate_cmd->add_flag("--condensed", val_condensed, "the document is a condensed twin");
  validate_cmd->callback([&] {
    action = [&] {
      const Json doc = codec::parse_json(read_text_file(val_path));
      const std::vector<Violation> violations =
          val_condensed ? validate(condensed_from_json(doc, false)) : validate(twin_from_json(doc, false));
      if (!violations.empty()) {
        for (const Violation& v : violations) err << v.code << " " << v.path << ": " << v.message << "\n";
        throw Error(Errc::kInvariant, std::to_string(violations.size()) + " violation(s)");
      }
      out << "valid\n";
    };
  });

  // condense
  auto* condense_cmd = app.add_subcommand("condense", "condense a twin to keypoints");
  std::string con_twin, con_out;
  double con_eps = 0.5;
  condense_cmd->add_option("--twin", con_twin, "twin document")->required();
  condense_cmd->add_option("--epsilon", con_eps, "tolerance in cells");
  condense_cmd->add_option("--out", con_out, "output condensed document")->required();
  condense_cmd->callback([&] {
    action = [&] {
      const CondensedTwin c = condense(parse_twin(read_text_file(con_twin)), con_eps);
      detail::write_file(con_out, serialize_condensed(c));
      std::size_t keypoints = 0;
      for (const auto& e : c.elements) keypoints += e.motion_keypoints.size();
      out << c.elements.size() << " elements, " << keypoints << " keypoints\n";
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << app.help();
    return 2;
  }
  try {
    if (action) action();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const StageError& e) {
    err << "error in stage " << e.stage() << ": " << e.name() << ": " << e.detail() << "\n";
  } catch (const ParseError& e) {
    err << "error: " << e.name() << " " << e.what() << "\n" << kDslHelp;
  } catch (const Error& e) {
    err << "error: " << e.name() << ": " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return 1;
}

}  // namespace cwm
