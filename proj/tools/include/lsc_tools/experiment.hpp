#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lsc/pipeline.hpp"
#include "lsc/world.hpp"

namespace lsc::tools {

/// Bad user input: unknown keys, wrong types, invalid values. Maps to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentSpec {
  WorldSpec world;
  /// When set, every seed runs on this world instead of a generated one.
  std::optional<std::filesystem::path> world_file;
  /// Defaults to the pure scale drift scenario.
  FrontendConfig frontend{DriftConfig{1e-3, 0.0, 0.0, 0}, ObservationConfig{}};
  ScheduleConfig schedule;
  EvalOptions eval;
  std::vector<Mode> modes{Mode::Baseline, Mode::Seg, Mode::SegGlobal};
  std::vector<std::uint64_t> seeds{1};
  std::filesystem::path output = "results";

  /// Throws UsageError on the first invalid field.
  void validate() const;
};

/// Reads the declarative experiment file. Absent keys keep their defaults; unknown keys
/// are rejected so typos do not silently fall back to defaults.
ExperimentSpec spec_from_json(const nlohmann::json& j);
ExperimentSpec spec_from_file(const std::filesystem::path& path);
nlohmann::json spec_to_json(const ExperimentSpec& spec);

void world_spec_from_json(const nlohmann::json& j, WorldSpec& spec);
nlohmann::json world_spec_to_json(const WorldSpec& spec);

/// Per-seed configuration: the world seed is the experiment seed, drift and observation
/// streams are derived from it so that all modes of one seed see the same inputs.
struct SeedInputs {
  World world;
  /// Defaults to the pure scale drift scenario.
  FrontendConfig frontend{DriftConfig{1e-3, 0.0, 0.0, 0}, ObservationConfig{}};
};
SeedInputs seed_inputs(const ExperimentSpec& spec, std::uint64_t seed);

std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t stream);

struct CellResult {
  Mode mode = Mode::Baseline;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  MetricsReport metrics;
};

struct ModeSummary {
  Mode mode = Mode::Baseline;
  int completed = 0;
  int failed = 0;
  double ate_mean = 0.0;
  double ate_median = 0.0;
  double rpe_mean = 0.0;
  double rpe_median = 0.0;
  /// Fraction of seeds where this mode beats Baseline, over seeds where both completed.
  std::optional<double> ate_win_rate;
  std::optional<double> rpe_win_rate;
};

struct ExperimentResult {
  std::vector<CellResult> cells;  // mode-major, in spec order
  std::vector<ModeSummary> summaries;
};

/// Runs every (mode, seed) cell on a pool of `jobs` workers and writes the output tree:
/// per cell `<mode>/seed_<k>/` with TUM trajectories, manifest and metrics, then
/// `aggregate.csv`, `summary.json` and the resolved `spec.json` at the top.
ExperimentResult run_experiment(const ExperimentSpec& spec, unsigned jobs);

std::vector<ModeSummary> summarize(const ExperimentSpec& spec, const std::vector<CellResult>& cells);

inline constexpr const char* kAggregateHeader = "mode,seed,ate_rmse,rpe_rmse,align_mode,rpe_delta";

}  // namespace lsc::tools
