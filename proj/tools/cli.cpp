#include "cli.hpp"

#include <CLI11.hpp>
#include <fmt/core.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "arapdepth/arap.hpp"
#include "arapdepth/config.hpp"
#include "arapdepth/error.hpp"
#include "arapdepth/evaluation.hpp"
#include "arapdepth/io.hpp"
#include "arapdepth/manifest.hpp"
#include "arapdepth/parallel.hpp"
#include "arapdepth/pipeline.hpp"
#include "arapdepth/synthetic.hpp"

namespace arapdepth::cli {

namespace {

namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNumericalFailure:
    case ErrorCode::kDegenerateTriple:
    case ErrorCode::kGrazingRay:
    case ErrorCode::kBehindCamera:
    case ErrorCode::kDegenerateSuperpixel:
      return kNumericalFailure;
    case ErrorCode::kUnusablePrior:
      return kUnusablePrior;
    default:
      return kInputError;
  }
}

std::string dashed(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool verbose = false;
  std::map<std::string, std::string> overrides;
};

RunConfig resolve_config(const Globals& g, const std::map<std::string, CLI::Option*>& key_options) {
  RunConfig config = g.config_path.empty() ? RunConfig{} : read_config(g.config_path);
  for (const auto& key : config_keys()) {
    auto it = key_options.find(key);
    if (it != key_options.end() && it->second->count() > 0) {
      set_config_value(config, key, g.overrides.at(key));
    }
  }
  if (g.seed) config.apply_seed(*g.seed);
  config.validate();
  return config;
}

/// Records every option given on the command line. Output locations are
/// reduced to their file names so reruns elsewhere yield identical manifests.
std::map<std::string, std::string> recorded_arguments(const CLI::App& app, const CLI::App* sub,
                                                      const std::vector<std::string>& outputs) {
  std::map<std::string, std::string> args;
  auto collect = [&](const CLI::App& a) {
    for (const CLI::Option* opt : a.get_options()) {
      if (opt->count() == 0 || opt->get_name() == "--help") continue;
      const std::string name = opt->get_name();
      std::string value;
      for (const auto& r : opt->results()) {
        if (!value.empty()) value += ",";
        value += r;
      }
      if (std::find(outputs.begin(), outputs.end(), name) != outputs.end()) {
        value = fs::path(value).filename().string();
      }
      args[name] = value;
    }
  };
  collect(app);
  if (sub) collect(*sub);
  return args;
}

void log(const Globals& g, const std::string& message) {
  if (g.verbose) fmt::print(stderr, "{}\n", message);
}

void log_result(const Globals& g, const PipelineResult& r) {
  if (!g.verbose) return;
  fmt::print(stderr, "superpixels={} arap_iterations={} converged={} arap_energy={:.6g}\n",
             r.segmentation.count, r.solve_report.iterations_used, r.solve_report.converged,
             r.solve_report.energy_trace.back());
  if (!r.refine_result.energy_trace.empty()) {
    fmt::print(stderr, "refinement_energy {:.6g} -> {:.6g}\n", r.refine_result.energy_trace.front(),
               r.refine_result.energy_trace.back());
  }
  for (const auto& note : r.diagnostics.notes) fmt::print(stderr, "note: {}\n", note);
}

std::string manifest_next_to(const std::string& output) { return output + ".manifest.json"; }

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Depth propagation for dynamic scenes with as-rigid-as-possible superpixel planes"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config_path, "Run configuration (key=value)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed for all randomized steps");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--verbose", g.verbose, "Progress and diagnostics on stderr");

  std::map<std::string, CLI::Option*> key_options;
  for (const auto& key : config_keys()) {
    if (key == "seed") continue;
    std::string names = "--" + key;
    if (dashed(key) != key) names += ",--" + dashed(key);
    key_options[key] = app.add_option(names, g.overrides[key], "Config value " + key)
                           ->group("Configuration");
  }

  // propagate
  struct {
    std::string ref_image, next_image, flow, ref_depth, intrinsics, out_depth, manifest;
    std::string energy_trace, refine_trace;
  } p;
  auto* propagate = app.add_subcommand("propagate", "Propagate depth from a reference frame to the next");
  propagate->add_option("--ref-image", p.ref_image)->required();
  propagate->add_option("--next-image", p.next_image)->required();
  propagate->add_option("--flow", p.flow, "Forward flow (.flo)")->required();
  propagate->add_option("--ref-depth", p.ref_depth, "Reference depth (PFM)")->required();
  propagate->add_option("--intrinsics", p.intrinsics)->required();
  propagate->add_option("--out-depth", p.out_depth, "Next-frame depth (PFM)")->required();
  propagate->add_option("--manifest", p.manifest, "Default: <out-depth>.manifest.json");
  propagate->add_option("--energy-trace", p.energy_trace, "ARAP energy trace CSV");
  propagate->add_option("--refine-trace", p.refine_trace, "Refinement energy/bound trace CSV");

  // multiframe
  struct {
    std::string frames, flows, init_depth, intrinsics, out_dir, truth;
  } m;
  auto* multiframe = app.add_subcommand("multiframe", "Propagate depth along a sequence");
  multiframe->add_option("--frames", m.frames, "List file of frame images")->required();
  multiframe->add_option("--flows", m.flows, "List file of forward flows")->required();
  multiframe->add_option("--init-depth", m.init_depth, "Depth of the first frame")->required();
  multiframe->add_option("--intrinsics", m.intrinsics)->required();
  multiframe->add_option("--out-dir", m.out_dir)->required();
  multiframe->add_option("--truth", m.truth, "List file of ground-truth depths, one per frame");

  // synth
  struct {
    std::string spec, out_dir;
    double amplitude = 0.0;
  } s;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic sequence with exact flow and depth");
  synth->add_option("--spec", s.spec, "Scene description (key=value)")->check(CLI::ExistingFile);
  synth->add_option("--amplitude", s.amplitude, "Deformation amplitude of the default scene");
  synth->add_option("--out-dir", s.out_dir)->required();

  // eval
  struct {
    std::string estimate, truth, manifest;
    std::optional<double> cap;
  } e;
  auto* eval = app.add_subcommand("eval", "Mean relative error of a depth map");
  eval->add_option("--estimate", e.estimate)->required();
  eval->add_option("--truth", e.truth)->required();
  eval->add_option("--cap", e.cap, "Ignore truth beyond this depth");
  eval->add_option("--manifest", e.manifest);

  // sweep
  struct {
    std::string parameter, scene, out, timing_csv;
    std::vector<std::string> values;
    int repetitions = 10;
  } w;
  auto* sweep = app.add_subcommand("sweep", "Parameter sweep on a sequence directory");
  sweep->add_option("--parameter", w.parameter,
                    "superpixel_count, knn_k, d_sigma or noise_percent")->required();
  sweep->add_option("--values", w.values, "Comma-separated values")->required()->delimiter(',');
  sweep->add_option("--scene", w.scene, "Sequence directory")->required();
  sweep->add_option("--out", w.out, "Result CSV")->required();
  sweep->add_option("--repetitions", w.repetitions)->check(CLI::PositiveNumber);
  sweep->add_option("--timing-csv", w.timing_csv, "Also write a table with wall times");

  // gradcheck
  struct {
    int size = 20;
    int instances = 100;
    double h = 1e-6;
    std::string manifest;
  } gc;
  auto* gradcheck = app.add_subcommand("gradcheck", "Compare the analytic ARAP gradient to finite differences");
  gradcheck->add_option("--size", gc.size, "Points per instance")->check(CLI::Range(2, 1000000));
  gradcheck->add_option("--instances", gc.instances)->check(CLI::PositiveNumber);
  gradcheck->add_option("--step", gc.h, "Finite-difference step")->check(CLI::PositiveNumber);
  gradcheck->add_option("--manifest", gc.manifest);

  std::vector<std::string> argv_rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex);
    return code == 0 ? kSuccess : kInputError;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    const RunConfig config = resolve_config(g, key_options);
    set_thread_count(g.threads);
    const auto t0 = std::chrono::steady_clock::now();

    if (sub == propagate) {
      const CameraIntrinsics K = read_intrinsics(p.intrinsics);
      SceneFrame ref{read_image(p.ref_image), read_depth(p.ref_depth, K, config.depth_convention), K};
      const Image next = read_image(p.next_image);
      const FlowField flow = read_flo(p.flow);
      const PipelineResult r = propagate_depth(ref, next, flow, config);
      log_result(g, r);
      write_depth(p.out_depth, r.next_depth, K, config.depth_convention);
      RunManifest manifest{"propagate", {}, config,
                           {p.ref_image, p.next_image, p.flow, p.ref_depth, p.intrinsics},
                           {p.out_depth}};
      if (!p.energy_trace.empty()) {
        std::ofstream out(p.energy_trace);
        if (!out) throw Error(ErrorCode::kIo, "cannot write " + p.energy_trace);
        write_energy_trace_csv(out, r.solve_report);
        manifest.outputs.push_back(p.energy_trace);
      }
      if (!p.refine_trace.empty()) {
        std::ofstream out(p.refine_trace);
        if (!out) throw Error(ErrorCode::kIo, "cannot write " + p.refine_trace);
        write_refine_trace_csv(out, r.refine_result);
        manifest.outputs.push_back(p.refine_trace);
      }
      const std::vector<std::string> outs{"--out-depth", "--manifest", "--energy-trace", "--refine-trace"};
      manifest.arguments = recorded_arguments(app, sub, outs);
      manifest.write(p.manifest.empty() ? manifest_next_to(p.out_depth) : p.manifest);

    } else if (sub == multiframe) {
      const CameraIntrinsics K = read_intrinsics(m.intrinsics);
      const auto frame_paths = read_path_list(m.frames);
      const auto flow_paths = read_path_list(m.flows);
      if (frame_paths.size() < 2) throw ParseError(m.frames + ": need at least 2 frames");
      if (flow_paths.size() + 1 != frame_paths.size()) {
        throw ParseError(fmt::format("{} frames need {} flows, got {}", frame_paths.size(),
                                     frame_paths.size() - 1, flow_paths.size()));
      }
      std::vector<std::string> truth_paths;
      if (!m.truth.empty()) {
        truth_paths = read_path_list(m.truth);
        if (truth_paths.size() != frame_paths.size()) {
          throw ParseError(fmt::format("{} frames but {} ground-truth depths", frame_paths.size(),
                                       truth_paths.size()));
        }
      }
      std::vector<SceneFrame> frames;
      for (const auto& path : frame_paths) frames.push_back({read_image(path), std::nullopt, K});
      frames.front().depth = read_depth(m.init_depth, K, config.depth_convention);
      std::vector<FlowField> flows;
      for (const auto& path : flow_paths) flows.push_back(read_flo(path));

      const auto results = propagate_multiframe(frames, flows, config);
      fs::create_directories(m.out_dir);
      RunManifest manifest{"multiframe", {}, config, {m.frames, m.flows, m.init_depth, m.intrinsics}, {}};
      for (const auto& path : frame_paths) manifest.inputs.push_back(path);
      for (const auto& path : flow_paths) manifest.inputs.push_back(path);
      std::vector<MetricReport> metrics;
      for (std::size_t t = 0; t < results.size(); ++t) {
        log(g, fmt::format("frame {}:", t + 1));
        log_result(g, results[t]);
        const std::string out = (fs::path(m.out_dir) / fmt::format("depth_{:03d}.pfm", t + 1)).string();
        write_depth(out, results[t].next_depth, K, config.depth_convention);
        manifest.outputs.push_back(out);
        if (!truth_paths.empty()) {
          const DepthMap truth = read_depth(truth_paths[t + 1], K, config.depth_convention);
          manifest.inputs.push_back(truth_paths[t + 1]);
          metrics.push_back(mre(results[t].next_depth, truth, evaluation_cap(config)));
          log(g, fmt::format("frame {} mre={:.6g}", t + 1, metrics.back().mre));
        }
      }
      if (!metrics.empty()) {
        const std::string out = (fs::path(m.out_dir) / "accumulation.csv").string();
        write_csv(out, error_accumulation(metrics));
        manifest.outputs.push_back(out);
      }
      if (!m.truth.empty()) manifest.inputs.push_back(m.truth);
      manifest.arguments = recorded_arguments(app, sub, {"--out-dir"});
      manifest.write((fs::path(m.out_dir) / "manifest.json").string());

    } else if (sub == synth) {
      SceneSpec spec = s.spec.empty() ? SceneSpec::two_object(s.amplitude) : read_scene_spec(s.spec);
      SyntheticScene scene(spec, config.seed);
      log(g, fmt::format("max flow residual {:.3g} px", scene.max_flow_residual()));
      fs::create_directories(s.out_dir);
      write_sequence(s.out_dir, scene.sequence(), config.depth_convention);
      RunManifest manifest{"synth", {}, config, {}, {}};
      if (!s.spec.empty()) manifest.inputs.push_back(s.spec);
      std::vector<std::string> written;
      for (const auto& entry : fs::directory_iterator(s.out_dir)) {
        if (entry.path().filename() != "manifest.json") written.push_back(entry.path().string());
      }
      std::sort(written.begin(), written.end());
      manifest.outputs = written;
      manifest.arguments = recorded_arguments(app, sub, {"--out-dir"});
      manifest.write((fs::path(s.out_dir) / "manifest.json").string());

    } else if (sub == eval) {
      DepthMap est = read_pfm(e.estimate);
      DepthMap truth = read_pfm(e.truth);
      const MetricReport report = mre(est, truth, e.cap.value_or(evaluation_cap(config)));
      fmt::print("mre {}\npixels {}\n", report.mre, report.valid_pixel_count);
      if (!e.manifest.empty()) {
        RunManifest manifest{"eval", recorded_arguments(app, sub, {"--manifest"}), config,
                             {e.estimate, e.truth}, {}};
        manifest.write(e.manifest);
      }

    } else if (sub == sweep) {
      const SweepParameter parameter = parse_sweep_parameter(w.parameter);
      std::vector<double> values;
      for (const auto& v : w.values) {
        std::size_t used = 0;
        double x = 0.0;
        try {
          x = std::stod(v, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != v.size()) throw ParseError("bad sweep value '" + v + "'");
        values.push_back(x);
      }
      const FrameSequence scene = read_sequence(w.scene, config.depth_convention);
      const auto rows = run_sweep(parameter, values, config, scene, w.repetitions);
      write_csv(w.out, sweep_table(rows, false));
      RunManifest manifest{"sweep", recorded_arguments(app, sub, {"--out", "--timing-csv"}), config,
                           {w.scene}, {w.out}};
      if (!w.timing_csv.empty()) write_csv(w.timing_csv, sweep_table(rows, true));
      manifest.write(manifest_next_to(w.out));

    } else if (sub == gradcheck) {
      double worst = 0.0;
      for (int i = 0; i < gc.instances; ++i) {
        const auto inst = random_arap_instance(config.seed + static_cast<std::uint64_t>(i), gc.size,
                                               config.smoothing_eps);
        worst = std::max(worst, gradient_relative_error(inst.problem, inst.next_depths, gc.h));
      }
      fmt::print("max relative gradient error {:.3e} over {} instances of {} points\n", worst,
                 gc.instances, gc.size);
      if (!gc.manifest.empty()) {
        RunManifest manifest{"gradcheck", recorded_arguments(app, sub, {"--manifest"}), config, {}, {}};
        manifest.write(gc.manifest);
      }
      if (!(worst <= 1e-5)) {
        fmt::print(stderr, "gradient check failed: {:.3e} > 1e-5\n", worst);
        return kNumericalFailure;
      }
    }

    log(g, fmt::format("{} finished in {:.3f} s", sub->get_name(),
                       std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()));
    return kSuccess;
  } catch (const Error& ex) {
    fmt::print(stderr, "arapdepth {}: {} [{}]\n", sub->get_name(), ex.what(), to_string(ex.code()));
    return exit_code_for(ex.code());
  } catch (const fs::filesystem_error& ex) {
    fmt::print(stderr, "arapdepth {}: {}\n", sub->get_name(), ex.what());
    return kInputError;
  }
}

int run(int argc, const char* const* argv) {
  return run(std::vector<std::string>(argv, argv + argc));
}

}  // namespace arapdepth::cli
