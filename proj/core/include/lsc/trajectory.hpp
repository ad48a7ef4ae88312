#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lsc/geometry.hpp"

namespace lsc {

struct StampedPose {
  double timestamp = 0.0;  // seconds
  Pose pose;
};

/// Time-ordered camera poses. Timestamps are strictly increasing.
class Trajectory {
 public:
  Trajectory() = default;
  /// Throws InvariantError if timestamps are not strictly increasing or not finite.
  explicit Trajectory(std::vector<StampedPose> poses);

  /// Appends a pose; its timestamp must exceed the last one.
  void push_back(const StampedPose& p);

  std::size_t size() const { return poses_.size(); }
  bool empty() const { return poses_.empty(); }
  const StampedPose& operator[](std::size_t i) const { return poses_[i]; }
  StampedPose& operator[](std::size_t i) { return poses_[i]; }
  std::span<const StampedPose> poses() const { return poses_; }
  auto begin() const { return poses_.begin(); }
  auto end() const { return poses_.end(); }

  std::vector<Vec3> positions() const;
  std::vector<double> timestamps() const;

 private:
  std::vector<StampedPose> poses_;
};

/// TUM trajectory format: `timestamp tx ty tz qx qy qz qw`, 9 significant digits.
void write_tum(std::ostream& out, const Trajectory& traj);
void write_tum(const std::filesystem::path& path, const Trajectory& traj);

/// Parses TUM text. Blank lines and lines starting with '#' are skipped.
/// Throws ParseError naming the line for malformed rows.
Trajectory read_tum(std::istream& in);
Trajectory read_tum(const std::filesystem::path& path);

}  // namespace lsc
