#include "lsc_tools/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lsc/errors.hpp"
#include "lsc/metrics.hpp"
#include "lsc/trajectory.hpp"
#include "lsc/world.hpp"
#include "lsc_tools/experiment.hpp"

namespace lsc::tools {

namespace {

struct WorldFlags {
  std::optional<double> corridor_length, door_spacing, door_height, door_width, turn_angle;
  std::optional<double> corridor_width, camera_height, walk_speed;
  std::optional<int> n_turns, clutter;

  void add(CLI::App& app) {
    app.add_option("--corridor-length", corridor_length, "Corridor length in m (all legs)");
    app.add_option("--door-spacing", door_spacing, "Distance between doors in m");
    app.add_option("--door-height", door_height, "Jamb length in m");
    app.add_option("--door-width", door_width, "Lintel length in m");
    app.add_option("--turns", n_turns, "Number of corners");
    app.add_option("--turn-angle", turn_angle, "Corner angle in degrees");
    app.add_option("--clutter", clutter, "Number of non-repeating clutter segments");
    app.add_option("--corridor-width", corridor_width, "Wall to wall in m");
    app.add_option("--camera-height", camera_height, "Camera height in m");
    app.add_option("--walk-speed", walk_speed, "Camera speed in m/s");
  }

  void apply(WorldSpec& s) const {
    if (corridor_length) s.corridor_length = *corridor_length;
    if (door_spacing) s.door_spacing = *door_spacing;
    if (door_height) s.door_height = *door_height;
    if (door_width) s.door_width = *door_width;
    if (n_turns) s.n_turns = *n_turns;
    if (turn_angle) s.turn_angle = *turn_angle;
    if (clutter) s.extra_unique_segments = *clutter;
    if (corridor_width) s.corridor_width = *corridor_width;
    if (camera_height) s.camera_height = *camera_height;
    if (walk_speed) s.walk_speed = *walk_speed;
  }
};

const std::map<std::string, AlignMode> kAlignNames{{"rigid", AlignMode::Rigid},
                                                   {"similarity", AlignMode::Similarity}};

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

int gen_world(const std::string& out_path, const std::string& config, std::optional<std::uint64_t> seed,
              const WorldFlags& flags, std::ostream& out) {
  WorldSpec spec;
  if (!config.empty()) spec = spec_from_file(config).world;
  flags.apply(spec);
  if (seed) spec.rng_seed = *seed;
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("invalid world spec: ") + e.what());
  }
  const World w = generate_corridor(spec);
  world_to_file(w, out_path);
  out << "wrote " << out_path << ": " << w.segments.size() << " segments, " << w.gt_trajectory.size()
      << " poses\n";
  return kExitOk;
}

void print_summary(const ExperimentResult& r, std::ostream& out) {
  out << "mode        done  ate_mean  ate_median  rpe_mean  rpe_median  ate_win_rate\n";
  for (const ModeSummary& s : r.summaries) {
    char line[160];
    std::snprintf(line, sizeof line, "%-10s %5d  %8s  %10s  %8s  %10s  %12s\n", to_string(s.mode).c_str(),
                  s.completed, fixed(s.ate_mean).c_str(), fixed(s.ate_median).c_str(),
                  fixed(s.rpe_mean).c_str(), fixed(s.rpe_median).c_str(),
                  s.ate_win_rate ? fixed(*s.ate_win_rate, 2).c_str() : "-");
    out << line;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Line-segment cluster scale-drift simulator"};
  app.name("lsc");
  app.require_subcommand(1);

  // gen-world
  auto* gen = app.add_subcommand("gen-world", "Generate a corridor world file");
  std::string gen_out, gen_config;
  std::optional<std::uint64_t> gen_seed;
  WorldFlags gen_flags;
  gen->add_option("-o,--out", gen_out, "Output world file (JSON)")->required();
  gen->add_option("-c,--config", gen_config, "Experiment file whose world section is used")
      ->check(CLI::ExistingFile);
  gen->add_option("--seed", gen_seed, "World seed (clutter placement)");
  gen_flags.add(*gen);

  // run
  auto* runc = app.add_subcommand("run", "Run modes x seeds and write results");
  std::string run_config, run_out, run_world;
  std::vector<std::string> run_modes;
  std::vector<std::uint64_t> run_seeds;
  std::optional<std::uint64_t> first_seed;
  std::optional<int> seed_count, rpe_delta, keyframe_interval, local_window, propagation_radius;
  std::optional<double> scale_sigma, rot_sigma, trans_sigma, noise, detect_prob, tau, lambda;
  std::optional<AlignMode> run_align;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  WorldFlags run_flags;
  runc->add_option("-c,--config", run_config, "Experiment file (JSON)")->check(CLI::ExistingFile);
  runc->add_option("-o,--out", run_out, "Output directory");
  runc->add_option("--world", run_world, "World file used for every seed")->check(CLI::ExistingFile);
  runc->add_option("--modes", run_modes, "Baseline, Seg, SegGlobal")->delimiter(',');
  runc->add_option("--seeds", run_seeds, "Explicit seed list")->delimiter(',');
  runc->add_option("--first-seed", first_seed, "First of a consecutive seed range");
  runc->add_option("--seed-count", seed_count, "Length of the seed range")->check(CLI::PositiveNumber);
  runc->add_option("-j,--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  runc->add_option("--scale-sigma", scale_sigma, "Log-scale drift per frame");
  runc->add_option("--rot-sigma", rot_sigma, "Rotation drift per frame (rad)");
  runc->add_option("--trans-sigma", trans_sigma, "Translation drift per frame (m)");
  runc->add_option("--noise", noise, "Endpoint noise sigma (m)");
  runc->add_option("--detect-prob", detect_prob, "Detection probability");
  runc->add_option("--tau", tau, "Relative clustering threshold");
  runc->add_option("--lambda", lambda, "Anchor weight");
  runc->add_option("--keyframe-interval", keyframe_interval, "Frames per keyframe");
  runc->add_option("--local-window", local_window, "Keyframes in the local window");
  runc->add_option("--propagation-radius", propagation_radius, "Frames around a keyframe used for its correction");
  runc->add_option("--align", run_align, "rigid or similarity")->transform(CLI::CheckedTransformer(kAlignNames));
  runc->add_option("--rpe-delta", rpe_delta, "RPE frame delta")->check(CLI::PositiveNumber);
  run_flags.add(*runc);

  // eval
  auto* evalc = app.add_subcommand("eval", "Score a TUM trajectory against ground truth");
  std::string est_path, gt_path, eval_out;
  EvalOptions eval_opts;
  evalc->add_option("estimate", est_path, "Estimated trajectory (TUM)")->required()->check(CLI::ExistingFile);
  evalc->add_option("ground_truth", gt_path, "Ground-truth trajectory (TUM)")->required()->check(CLI::ExistingFile);
  evalc->add_option("--align", eval_opts.mode, "rigid or similarity")
      ->transform(CLI::CheckedTransformer(kAlignNames));
  evalc->add_option("--rpe-delta", eval_opts.rpe_delta, "RPE frame delta")->check(CLI::PositiveNumber);
  evalc->add_option("--tolerance", eval_opts.tolerance, "Timestamp matching tolerance (s)");
  evalc->add_flag("--interpolate-gt", eval_opts.interpolate_gt, "Spline-interpolate sparse ground truth");
  evalc->add_option("-o,--out", eval_out, "Also write the metrics JSON here");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return gen_world(gen_out, gen_config, gen_seed, gen_flags, out);

    if (*runc) {
      ExperimentSpec spec = run_config.empty() ? ExperimentSpec{} : spec_from_file(run_config);
      run_flags.apply(spec.world);
      if (!run_world.empty()) spec.world_file = run_world;
      if (!run_out.empty()) spec.output = run_out;
      if (!run_modes.empty()) {
        spec.modes.clear();
        for (const auto& m : run_modes) {
          try {
            spec.modes.push_back(parse_mode(m));
          } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
          }
        }
      }
      if (!run_seeds.empty()) spec.seeds = run_seeds;
      if (first_seed || seed_count) {
        if (!run_seeds.empty()) throw UsageError("--seeds cannot be combined with --first-seed/--seed-count");
        const std::uint64_t first = first_seed.value_or(1);
        spec.seeds.clear();
        for (int k = 0; k < seed_count.value_or(1); ++k) spec.seeds.push_back(first + static_cast<std::uint64_t>(k));
      }
      if (scale_sigma) spec.frontend.drift.scale_sigma = *scale_sigma;
      if (rot_sigma) spec.frontend.drift.rot_sigma = *rot_sigma;
      if (trans_sigma) spec.frontend.drift.trans_sigma = *trans_sigma;
      if (noise) spec.frontend.observation.endpoint_noise_sigma = *noise;
      if (detect_prob) spec.frontend.observation.detect_prob = *detect_prob;
      if (tau) spec.schedule.tau = *tau;
      if (lambda) spec.schedule.lambda = *lambda;
      if (keyframe_interval) spec.schedule.keyframe_interval = *keyframe_interval;
      if (local_window) spec.schedule.local_window = *local_window;
      if (propagation_radius) spec.schedule.propagation_radius = *propagation_radius;
      if (run_align) spec.eval.mode = *run_align;
      if (rpe_delta) spec.eval.rpe_delta = *rpe_delta;
      spec.validate();

      const ExperimentResult r = run_experiment(spec, jobs);
      print_summary(r, out);
      out << "results in " << spec.output.string() << "\n";
      int failed = 0;
      for (const auto& c : r.cells) {
        if (!c.ok) {
          ++failed;
          err << "cell " << to_string(c.mode) << " seed " << c.seed << " failed: " << c.error << "\n";
        }
      }
      return failed == 0 ? kExitOk : kExitRuntime;
    }

    if (*evalc) {
      Trajectory est, gt;
      try {
        est = read_tum(est_path);
      } catch (const ParseError& e) {
        throw ParseError(est_path + ": " + e.what());
      }
      try {
        gt = read_tum(gt_path);
      } catch (const ParseError& e) {
        throw ParseError(gt_path + ": " + e.what());
      }
      const MetricsReport m = evaluate(est, gt, eval_opts);
      const std::string text = metrics_to_json(m).dump(1) + "\n";
      out << text;
      if (!eval_out.empty()) {
        std::ofstream f(eval_out, std::ios::binary);
        if (!(f << text)) throw std::runtime_error("cannot write " + eval_out);
      }
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace lsc::tools
