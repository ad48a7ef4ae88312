#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lsc/geometry.hpp"
#include "lsc/trajectory.hpp"
#include "lsc/world.hpp"

namespace lsc {

using PointId = int;
using ObservationId = int;

/// Per-frame random-walk increments of the map distortion.
struct DriftConfig {
  double scale_sigma = 0.0;  // stddev of log-scale per frame
  double rot_sigma = 0.0;    // rad per frame
  double trans_sigma = 0.0;  // m per frame
  std::uint64_t seed = 0;

  void validate() const;
};

/// Cumulative similarity distortion applied to ground truth, plus its RNG stream.
struct DriftState {
  Sim3 cumulative;
  DriftConfig config;
  std::mt19937_64 rng;

  static DriftState start(const DriftConfig& config);
};

/// cumulative <- cumulative * increment, with log s ~ N(0, scale_sigma), a uniformly
/// random axis with angle ~ N(0, rot_sigma) and translation ~ N(0, trans_sigma^2 I).
/// The same number of variates is drawn whatever the sigmas are.
DriftState step_drift(DriftState d);

struct ObservationConfig {
  double detect_prob = 0.8;
  double endpoint_noise_sigma = 0.01;  // m, per axis
  double max_range = 6.0;              // m, camera to segment midpoint
  double min_segment_length = 0.3;     // m
  std::uint64_t seed = 0;

  void validate() const;
};

struct MapPoint {
  PointId id = 0;
  Vec3 position = Vec3::Zero();
  int first_seen_frame = 0;
};

struct SegmentObservation {
  ObservationId id = 0;
  std::array<PointId, 2> endpoint_ids{};
  int frame = 0;
  /// Simulation bookkeeping; the clustering and optimization code never reads it.
  int world_segment_index = 0;
};

/// Map built by the simulated front end. Point ids and observation ids are dense indices.
struct EstimatedMap {
  std::vector<MapPoint> points;
  std::vector<SegmentObservation> observations;
  Trajectory est_trajectory;

  /// Throws std::out_of_range naming the id when it does not resolve.
  const MapPoint& point(PointId id) const;
  MapPoint& point(PointId id);
  /// p2 - p1 for the observation's current endpoint positions.
  Vec3 segment_vector(const SegmentObservation& obs) const;
  /// Throws InvariantError when an observation references a missing point.
  void validate() const;
};

/// Frame-by-frame simulator. `step` accepts a correction that the back end has
/// folded into its pose estimate; new points are then created in the corrected
/// frame, the way a tracking thread triangulates against its current pose.
class FrontEnd {
 public:
  FrontEnd(const World& world, const DriftConfig& drift, const ObservationConfig& obs);

  bool done() const { return next_frame_ >= world_->gt_trajectory.size(); }
  int next_frame() const { return static_cast<int>(next_frame_); }

  struct FrameOutput {
    int frame = 0;
    ObservationId first_new_observation = 0;
    ObservationId end_new_observation = 0;
  };
  FrameOutput step(const Sim3& correction = Sim3::identity());

  const EstimatedMap& map() const { return map_; }
  EstimatedMap& mutable_map() { return map_; }
  const DriftState& drift() const { return drift_; }
  /// Ground truth distorted by the drift alone, without any back-end correction.
  const Trajectory& raw_trajectory() const { return raw_; }

 private:
  const World* world_;
  ObservationConfig obs_;
  DriftState drift_;
  std::mt19937_64 obs_rng_;
  std::size_t next_frame_ = 0;
  std::vector<std::array<int, 2>> segment_endpoints_;  // world endpoint index per segment end
  std::vector<Vec3> world_endpoints_;
  std::vector<PointId> endpoint_to_point_;  // -1 until first detection
  EstimatedMap map_;
  Trajectory raw_;
};

/// Runs the front end over the whole world with no back-end feedback.
EstimatedMap simulate(const World& world, const DriftConfig& drift, const ObservationConfig& obs);

/// Map export: points, observations and trajectory as JSON.
std::string map_to_json(const EstimatedMap& map);

}  // namespace lsc
