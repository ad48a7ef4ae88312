#include "lsc_tools/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "lsc/errors.hpp"

namespace lsc::tools {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw UsageError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw UsageError(where + ": unknown key '" + key + "'");
  }
}

std::string path_of(const std::string& where, const char* key) {
  return where.empty() ? key : where + "." + key;
}

void read(const json& j, const std::string& where, const char* key, double& out) {
  if (!j.contains(key)) return;
  if (!j[key].is_number()) throw UsageError(path_of(where, key) + ": expected a number");
  out = j[key].get<double>();
}

void read(const json& j, const std::string& where, const char* key, int& out) {
  if (!j.contains(key)) return;
  if (!j[key].is_number_integer()) throw UsageError(path_of(where, key) + ": expected an integer");
  out = j[key].get<int>();
}

void read(const json& j, const std::string& where, const char* key, bool& out) {
  if (!j.contains(key)) return;
  if (!j[key].is_boolean()) throw UsageError(path_of(where, key) + ": expected true or false");
  out = j[key].get<bool>();
}

void read(const json& j, const std::string& where, const char* key, std::string& out) {
  if (!j.contains(key)) return;
  if (!j[key].is_string()) throw UsageError(path_of(where, key) + ": expected a string");
  out = j[key].get<std::string>();
}

void read_seed(const json& j, const std::string& where, const char* key, std::uint64_t& out) {
  if (!j.contains(key)) return;
  if (!j[key].is_number_unsigned()) {
    throw UsageError(path_of(where, key) + ": expected a non-negative integer");
  }
  out = j[key].get<std::uint64_t>();
}

std::string pivot_name(CorrectionPivot p) {
  return p == CorrectionPivot::MapOrigin ? "map_origin" : "local_points";
}

CorrectionPivot parse_pivot(const std::string& s) {
  if (s == "map_origin") return CorrectionPivot::MapOrigin;
  if (s == "local_points") return CorrectionPivot::LocalPoints;
  throw UsageError("schedule.pivot: expected map_origin or local_points, got '" + s + "'");
}

template <typename F>
auto as_usage(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw UsageError(where + ": " + e.what());
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string csv_row(const std::string& mode, const std::string& seed, const std::string& ate,
                    const std::string& rpe, const EvalOptions& eval) {
  return mode + "," + seed + "," + ate + "," + rpe + "," + to_string(eval.mode) + "," +
         std::to_string(eval.rpe_delta) + "\n";
}

fs::path cell_dir(const ExperimentSpec& spec, Mode mode, std::uint64_t seed) {
  return spec.output / to_string(mode) / ("seed_" + std::to_string(seed));
}

CellResult run_cell(const ExperimentSpec& spec, const SeedInputs& inputs, Mode mode,
                    std::uint64_t seed) {
  CellResult cell;
  cell.mode = mode;
  cell.seed = seed;
  const fs::path dir = cell_dir(spec, mode, seed);
  try {
    fs::create_directories(dir);
    ScheduleConfig schedule = spec.schedule;
    schedule.mode = mode;
    const RunResult r = run(inputs.world, inputs.frontend, schedule, spec.eval);

    EvalOptions other = spec.eval;
    other.mode = spec.eval.mode == AlignMode::Similarity ? AlignMode::Rigid : AlignMode::Similarity;
    const MetricsReport alt = evaluate(r.corrected, r.ground_truth, other);

    write_tum(dir / "corrected.tum", r.corrected);
    write_tum(dir / "raw.tum", r.raw);
    write_tum(dir / "ground_truth.tum", r.ground_truth);
    json manifest = run_manifest(r, inputs.frontend, schedule);
    manifest["seed"] = seed;
    manifest["world_seed"] = inputs.world.seed;
    write_text(dir / "manifest.json", manifest.dump(1) + "\n");
    json metrics = {{"mode", to_string(mode)},
                    {"seed", seed},
                    {to_string(r.metrics.mode), metrics_to_json(r.metrics)},
                    {to_string(alt.mode), metrics_to_json(alt)}};
    write_text(dir / "metrics.json", metrics.dump(1) + "\n");
    write_text(dir / "metrics.csv",
               std::string(kAggregateHeader) + "\n" +
                   csv_row(to_string(mode), std::to_string(seed), fmt(r.metrics.ate_rmse),
                           fmt(r.metrics.rpe_rmse), spec.eval));
    cell.metrics = r.metrics;
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.error = e.what();
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!ec) {
      std::ofstream(dir / "error.txt") << cell.error << "\n";
    }
  }
  return cell;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

void world_spec_from_json(const json& j, WorldSpec& spec) {
  const std::string w = "world";
  check_keys(j, w,
             {"corridor_length", "door_spacing", "door_height", "door_width", "n_turns", "turn_angle",
              "extra_unique_segments", "corridor_width", "camera_height", "walk_speed"});
  read(j, w, "corridor_length", spec.corridor_length);
  read(j, w, "door_spacing", spec.door_spacing);
  read(j, w, "door_height", spec.door_height);
  read(j, w, "door_width", spec.door_width);
  read(j, w, "n_turns", spec.n_turns);
  read(j, w, "turn_angle", spec.turn_angle);
  read(j, w, "extra_unique_segments", spec.extra_unique_segments);
  read(j, w, "corridor_width", spec.corridor_width);
  read(j, w, "camera_height", spec.camera_height);
  read(j, w, "walk_speed", spec.walk_speed);
}

json world_spec_to_json(const WorldSpec& s) {
  return {{"corridor_length", s.corridor_length},
          {"door_spacing", s.door_spacing},
          {"door_height", s.door_height},
          {"door_width", s.door_width},
          {"n_turns", s.n_turns},
          {"turn_angle", s.turn_angle},
          {"extra_unique_segments", s.extra_unique_segments},
          {"corridor_width", s.corridor_width},
          {"camera_height", s.camera_height},
          {"walk_speed", s.walk_speed}};
}

ExperimentSpec spec_from_json(const json& j) {
  ExperimentSpec spec;
  check_keys(j, "experiment",
             {"world", "world_file", "drift", "observation", "schedule", "eval", "modes", "seeds", "output"});
  if (j.contains("world")) world_spec_from_json(j["world"], spec.world);
  if (j.contains("world_file")) {
    std::string path;
    read(j, "", "world_file", path);
    spec.world_file = path;
  }
  if (j.contains("drift")) {
    const json& d = j["drift"];
    check_keys(d, "drift", {"scale_sigma", "rot_sigma", "trans_sigma"});
    read(d, "drift", "scale_sigma", spec.frontend.drift.scale_sigma);
    read(d, "drift", "rot_sigma", spec.frontend.drift.rot_sigma);
    read(d, "drift", "trans_sigma", spec.frontend.drift.trans_sigma);
  }
  if (j.contains("observation")) {
    const json& o = j["observation"];
    check_keys(o, "observation", {"detect_prob", "endpoint_noise_sigma", "max_range", "min_segment_length"});
    read(o, "observation", "detect_prob", spec.frontend.observation.detect_prob);
    read(o, "observation", "endpoint_noise_sigma", spec.frontend.observation.endpoint_noise_sigma);
    read(o, "observation", "max_range", spec.frontend.observation.max_range);
    read(o, "observation", "min_segment_length", spec.frontend.observation.min_segment_length);
  }
  if (j.contains("schedule")) {
    const json& s = j["schedule"];
    check_keys(s, "schedule",
               {"keyframe_interval", "local_window", "max_iterations", "lambda", "tau", "pivot",
                "correct_rotation", "propagation_radius"});
    read(s, "schedule", "keyframe_interval", spec.schedule.keyframe_interval);
    read(s, "schedule", "local_window", spec.schedule.local_window);
    read(s, "schedule", "max_iterations", spec.schedule.max_iterations);
    read(s, "schedule", "lambda", spec.schedule.lambda);
    read(s, "schedule", "tau", spec.schedule.tau);
    read(s, "schedule", "correct_rotation", spec.schedule.correct_rotation);
    read(s, "schedule", "propagation_radius", spec.schedule.propagation_radius);
    std::string pivot = pivot_name(spec.schedule.pivot);
    read(s, "schedule", "pivot", pivot);
    spec.schedule.pivot = parse_pivot(pivot);
  }
  if (j.contains("eval")) {
    const json& e = j["eval"];
    check_keys(e, "eval", {"align", "rpe_delta", "tolerance", "interpolate_gt"});
    std::string align = to_string(spec.eval.mode);
    read(e, "eval", "align", align);
    spec.eval.mode = as_usage("eval.align", [&] { return parse_align_mode(align); });
    read(e, "eval", "rpe_delta", spec.eval.rpe_delta);
    read(e, "eval", "tolerance", spec.eval.tolerance);
    read(e, "eval", "interpolate_gt", spec.eval.interpolate_gt);
  }
  if (j.contains("modes")) {
    if (!j["modes"].is_array()) throw UsageError("modes: expected an array of mode names");
    spec.modes.clear();
    for (const json& m : j["modes"]) {
      if (!m.is_string()) throw UsageError("modes: expected an array of mode names");
      spec.modes.push_back(as_usage("modes", [&] { return parse_mode(m.get<std::string>()); }));
    }
  }
  if (j.contains("seeds")) {
    const json& s = j["seeds"];
    spec.seeds.clear();
    if (s.is_array()) {
      for (const json& v : s) {
        if (!v.is_number_unsigned()) throw UsageError("seeds: expected non-negative integers");
        spec.seeds.push_back(v.get<std::uint64_t>());
      }
    } else if (s.is_object()) {
      check_keys(s, "seeds", {"first", "count"});
      std::uint64_t first = 1;
      int count = 1;
      read_seed(s, "seeds", "first", first);
      read(s, "seeds", "count", count);
      if (count < 1) throw UsageError("seeds.count: must be >= 1");
      for (int k = 0; k < count; ++k) spec.seeds.push_back(first + static_cast<std::uint64_t>(k));
    } else {
      throw UsageError("seeds: expected an array or {first, count}");
    }
  }
  if (j.contains("output")) {
    std::string out;
    read(j, "", "output", out);
    spec.output = out;
  }
  spec.validate();
  return spec;
}

ExperimentSpec spec_from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
  ExperimentSpec spec = spec_from_json(j);
  // Relative world files resolve against the config's directory.
  if (spec.world_file && spec.world_file->is_relative()) {
    spec.world_file = path.parent_path() / *spec.world_file;
  }
  return spec;
}

json spec_to_json(const ExperimentSpec& spec) {
  json j;
  if (spec.world_file) {
    j["world_file"] = spec.world_file->generic_string();
  } else {
    j["world"] = world_spec_to_json(spec.world);
  }
  const auto& d = spec.frontend.drift;
  const auto& o = spec.frontend.observation;
  const auto& s = spec.schedule;
  j["drift"] = {{"scale_sigma", d.scale_sigma}, {"rot_sigma", d.rot_sigma}, {"trans_sigma", d.trans_sigma}};
  j["observation"] = {{"detect_prob", o.detect_prob},
                      {"endpoint_noise_sigma", o.endpoint_noise_sigma},
                      {"max_range", o.max_range},
                      {"min_segment_length", o.min_segment_length}};
  j["schedule"] = {{"keyframe_interval", s.keyframe_interval},
                   {"local_window", s.local_window},
                   {"max_iterations", s.max_iterations},
                   {"lambda", s.lambda},
                   {"tau", s.tau},
                   {"pivot", pivot_name(s.pivot)},
                   {"correct_rotation", s.correct_rotation},
                   {"propagation_radius", s.propagation_radius}};
  j["eval"] = {{"align", to_string(spec.eval.mode)},
               {"rpe_delta", spec.eval.rpe_delta},
               {"tolerance", spec.eval.tolerance},
               {"interpolate_gt", spec.eval.interpolate_gt}};
  j["modes"] = json::array();
  for (Mode m : spec.modes) j["modes"].push_back(to_string(m));
  j["seeds"] = spec.seeds;
  j["output"] = spec.output.generic_string();
  return j;
}

void ExperimentSpec::validate() const {
  if (seeds.empty()) throw UsageError("seeds: list must not be empty");
  if (modes.empty()) throw UsageError("modes: list must not be empty");
  if (output.empty()) throw UsageError("output: directory must be given");
  std::set<std::uint64_t> unique_seeds(seeds.begin(), seeds.end());
  if (unique_seeds.size() != seeds.size()) throw UsageError("seeds: duplicate seed");
  std::set<Mode> unique_modes(modes.begin(), modes.end());
  if (unique_modes.size() != modes.size()) throw UsageError("modes: duplicate mode");
  if (!world_file) as_usage("world", [&] { world.validate(); return 0; });
  as_usage("drift", [&] { frontend.drift.validate(); return 0; });
  as_usage("observation", [&] { frontend.observation.validate(); return 0; });
  as_usage("schedule", [&] { schedule.validate(); return 0; });
  if (eval.rpe_delta < 1) throw UsageError("eval.rpe_delta: must be >= 1");
  if (!(eval.tolerance >= 0.0)) throw UsageError("eval.tolerance: must be >= 0");
}

SeedInputs seed_inputs(const ExperimentSpec& spec, std::uint64_t seed) {
  SeedInputs in;
  if (spec.world_file) {
    in.world = world_from_file(*spec.world_file);
  } else {
    WorldSpec ws = spec.world;
    ws.rng_seed = seed;
    in.world = generate_corridor(ws);
  }
  in.frontend = spec.frontend;
  in.frontend.drift.seed = derive_seed(seed, 1);
  in.frontend.observation.seed = derive_seed(seed, 2);
  return in;
}

std::vector<ModeSummary> summarize(const ExperimentSpec& spec, const std::vector<CellResult>& cells) {
  auto find = [&](Mode m, std::uint64_t seed) -> const CellResult* {
    for (const auto& c : cells) {
      if (c.mode == m && c.seed == seed) return &c;
    }
    return nullptr;
  };
  const bool has_baseline = std::find(spec.modes.begin(), spec.modes.end(), Mode::Baseline) != spec.modes.end();

  std::vector<ModeSummary> out;
  for (Mode m : spec.modes) {
    ModeSummary s;
    s.mode = m;
    std::vector<double> ate, rpe;
    int paired = 0, ate_wins = 0, rpe_wins = 0;
    for (std::uint64_t seed : spec.seeds) {
      const CellResult* c = find(m, seed);
      if (!c || !c->ok) {
        ++s.failed;
        continue;
      }
      ++s.completed;
      ate.push_back(c->metrics.ate_rmse);
      rpe.push_back(c->metrics.rpe_rmse);
      if (m == Mode::Baseline || !has_baseline) continue;
      const CellResult* b = find(Mode::Baseline, seed);
      if (!b || !b->ok) continue;
      ++paired;
      ate_wins += c->metrics.ate_rmse < b->metrics.ate_rmse;
      rpe_wins += c->metrics.rpe_rmse < b->metrics.rpe_rmse;
    }
    if (!ate.empty()) {
      s.ate_mean = std::accumulate(ate.begin(), ate.end(), 0.0) / static_cast<double>(ate.size());
      s.rpe_mean = std::accumulate(rpe.begin(), rpe.end(), 0.0) / static_cast<double>(rpe.size());
      s.ate_median = median(ate);
      s.rpe_median = median(rpe);
    }
    if (paired > 0) {
      s.ate_win_rate = static_cast<double>(ate_wins) / paired;
      s.rpe_win_rate = static_cast<double>(rpe_wins) / paired;
    }
    out.push_back(s);
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, unsigned jobs) {
  spec.validate();
  fs::create_directories(spec.output);

  // Worlds are built once per seed and shared read-only by that seed's cells.
  std::vector<SeedInputs> inputs;
  std::vector<std::string> input_errors;
  inputs.reserve(spec.seeds.size());
  for (std::uint64_t seed : spec.seeds) {
    try {
      inputs.push_back(seed_inputs(spec, seed));
      input_errors.emplace_back();
    } catch (const std::exception& e) {
      inputs.emplace_back();
      input_errors.emplace_back(e.what());
    }
  }

  const std::size_t n_cells = spec.modes.size() * spec.seeds.size();
  std::vector<CellResult> cells(n_cells);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n_cells; i = next++) {
      const std::size_t mi = i / spec.seeds.size();
      const std::size_t si = i % spec.seeds.size();
      if (!input_errors[si].empty()) {
        cells[i] = {spec.modes[mi], spec.seeds[si], false, input_errors[si], {}};
        continue;
      }
      cells[i] = run_cell(spec, inputs[si], spec.modes[mi], spec.seeds[si]);
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n_cells)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  ExperimentResult result;
  result.cells = std::move(cells);
  result.summaries = summarize(spec, result.cells);

  std::ostringstream csv;
  csv << kAggregateHeader << "\n";
  for (const CellResult& c : result.cells) {
    csv << (c.ok ? csv_row(to_string(c.mode), std::to_string(c.seed), fmt(c.metrics.ate_rmse),
                           fmt(c.metrics.rpe_rmse), spec.eval)
                 : csv_row(to_string(c.mode), std::to_string(c.seed), "failed", "failed", spec.eval));
  }
  json summary = json::array();
  for (const ModeSummary& s : result.summaries) {
    const std::string mode = to_string(s.mode);
    csv << csv_row(mode, "mean", fmt(s.ate_mean), fmt(s.rpe_mean), spec.eval);
    csv << csv_row(mode, "median", fmt(s.ate_median), fmt(s.rpe_median), spec.eval);
    if (s.ate_win_rate) {
      csv << csv_row(mode, "win_rate", fmt(*s.ate_win_rate), fmt(*s.rpe_win_rate), spec.eval);
    }
    json js = {{"mode", mode},
               {"completed", s.completed},
               {"failed", s.failed},
               {"ate_mean", s.ate_mean},
               {"ate_median", s.ate_median},
               {"rpe_mean", s.rpe_mean},
               {"rpe_median", s.rpe_median}};
    if (s.ate_win_rate) {
      js["ate_win_rate"] = *s.ate_win_rate;
      js["rpe_win_rate"] = *s.rpe_win_rate;
    }
    summary.push_back(js);
  }
  json failures = json::array();
  for (const CellResult& c : result.cells) {
    if (!c.ok) failures.push_back({{"mode", to_string(c.mode)}, {"seed", c.seed}, {"error", c.error}});
  }

  write_text(spec.output / "aggregate.csv", csv.str());
  write_text(spec.output / "summary.json",
             json{{"modes", summary}, {"failures", failures}}.dump(1) + "\n");
  // The tree's own location is left out so that copies of one experiment compare equal.
  json resolved = spec_to_json(spec);
  resolved.erase("output");
  write_text(spec.output / "spec.json", resolved.dump(1) + "\n");
  return result;
}

}  // namespace lsc::tools
