#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lsc/geometry.hpp"
#include "lsc/trajectory.hpp"

namespace lsc {

/// Archetype label for clutter segments that repeat nowhere.
inline constexpr int kNoArchetype = -1;
/// Frames per second of the virtual camera.
inline constexpr double kFrameRate = 30.0;

struct WorldSegment {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  int archetype = kNoArchetype;

  Vec3 vector() const { return segment_vector(a, b); }
  bool operator==(const WorldSegment&) const = default;
};

/// Parameters of a procedurally generated corridor.
struct WorldSpec {
  double corridor_length = 40.0;  // m, summed over all legs
  double door_spacing = 2.0;      // m, along the centerline
  double door_height = 2.1;       // m
  double door_width = 0.9;        // m
  int n_turns = 0;
  double turn_angle = 90.0;  // deg, positive turns left
  int extra_unique_segments = 10;
  std::uint64_t rng_seed = 0;

  double corridor_width = 2.0;  // m, wall to wall
  double camera_height = 1.5;   // m
  double walk_speed = 1.0;      // m/s

  /// Throws std::invalid_argument naming the violated constraint.
  void validate() const;
};

struct World {
  std::vector<WorldSegment> segments;
  Trajectory gt_trajectory;
  std::uint64_t seed = 0;

  /// Throws InvariantError when the world is unusable (empty segment, no repeated archetype).
  void validate() const;
  /// Number of distinct archetype labels (clutter excluded).
  int archetype_count() const;
  int clutter_count() const;
};

bool operator==(const World& a, const World& b);

/// Doors alternate between the two walls; jambs share archetype 0 and lintels get one
/// archetype per distinct leg direction. The camera walks the centerline at walk_speed,
/// sampled at kFrameRate, with circular fillets at the corners. Pure function of `spec`.
World generate_corridor(const WorldSpec& spec);

/// JSON with keys `segments`, `trajectory`, `seed`. Doubles round-trip bit-exactly.
std::string world_to_json(const World& w);
World world_from_json(const std::string& text);

void world_to_file(const World& w, const std::filesystem::path& path);
World world_from_file(const std::filesystem::path& path);

}  // namespace lsc
