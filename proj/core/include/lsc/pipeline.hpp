#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lsc/cluster_opt.hpp"
#include "lsc/clustering.hpp"
#include "lsc/frontend.hpp"
#include "lsc/metrics.hpp"
#include "lsc/world.hpp"

namespace lsc {

enum class Mode { Baseline, Seg, SegGlobal };

std::string to_string(Mode mode);
/// Accepts "Baseline", "Seg", "SegGlobal" (case-insensitive).
Mode parse_mode(const std::string& text);

/// Where a keyframe's similarity correction is pivoted.
enum class CorrectionPivot {
  /// Scale and rotation act about the map origin; the fitted translation is dropped
  /// because cluster edges carry no translation information.
  MapOrigin,
  /// The full fitted similarity is applied, which pivots about the local points.
  LocalPoints,
};

struct ScheduleConfig {
  Mode mode = Mode::Seg;
  int keyframe_interval = 10;  // frames
  int local_window = 5;        // keyframes
  int max_iterations = 10;
  double lambda = 1e-3;
  double tau = kDefaultClusterTau;
  CorrectionPivot pivot = CorrectionPivot::MapOrigin;
  bool correct_rotation = false;
  /// Frames either side of a keyframe whose new points feed its correction. The two jambs
  /// of one door are first seen about a second apart at walking speed.
  int propagation_radius = 30;

  void validate() const;
};

struct FrontendConfig {
  DriftConfig drift;
  ObservationConfig observation;
};

struct PropagationOptions {
  int keyframe_interval = 10;
  CorrectionPivot pivot = CorrectionPivot::MapOrigin;
  bool correct_rotation = true;
  int min_points = 3;
  /// Frames either side of a keyframe within which a point counts as near it; negative
  /// means half the keyframe interval.
  int radius = -1;
};

struct PoseCorrection {
  Trajectory trajectory;
  /// One entry per keyframe (frame index = k * keyframe_interval) covered by the trajectory.
  std::vector<Sim3> keyframe_corrections;
  /// True where the keyframe had enough moved points to fit its own correction.
  std::vector<bool> fitted;
  /// Correction applied to the last frame.
  Sim3 latest;
  std::vector<std::string> log;
};

/// Fits, per keyframe, the similarity taking the pre-optimization positions of the moved
/// points first seen near that keyframe onto their post-optimization positions. Keyframes
/// with fewer than `min_points` moved points get identity and a log entry; in the applied
/// schedule they hold the latest fitted correction before them. Frames between keyframes
/// interpolate the two bracketing corrections.
PoseCorrection propagate_to_poses(std::span<const MapPoint> pre, std::span<const MapPoint> post,
                                  const Trajectory& trajectory, const PropagationOptions& options);

struct RoundRecord {
  int frame = 0;
  Scope::Kind scope = Scope::Kind::Local;
  std::size_t edges = 0;
  std::size_t variables = 0;
  OptReport report;
  int fitted_keyframes = 0;
};

struct RunResult {
  Mode mode = Mode::Baseline;
  Trajectory corrected;
  Trajectory raw;
  Trajectory ground_truth;
  EstimatedMap map;
  ClusterStore clusters;
  std::vector<RoundRecord> rounds;
  std::vector<std::string> log;
  MetricsReport metrics;
};

/// Frames are processed in order; each new observation is clustered on arrival.
/// Every keyframe, Seg solves the recent-window problem and SegGlobal additionally the
/// whole map; after each solve centers are recomputed and corrections propagate to the
/// trajectory and to the front end. Baseline never optimizes.
RunResult run(const World& world, const FrontendConfig& frontend, const ScheduleConfig& schedule,
              const EvalOptions& eval = {});

/// Configs, per-round objective traces and cluster statistics.
nlohmann::json run_manifest(const RunResult& result, const FrontendConfig& frontend,
                            const ScheduleConfig& schedule);

}  // namespace lsc
