#include "lsc/trajectory.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lsc/errors.hpp"

namespace lsc {

namespace {

void check_stamp(double previous, double next, std::size_t index) {
  if (!std::isfinite(next)) {
    throw InvariantError("trajectory: non-finite timestamp at pose " + std::to_string(index));
  }
  if (index > 0 && !(next > previous)) {
    throw InvariantError("trajectory: timestamps not strictly increasing at pose " +
                         std::to_string(index));
  }
}

}  // namespace

Trajectory::Trajectory(std::vector<StampedPose> poses) : poses_(std::move(poses)) {
  for (std::size_t i = 0; i < poses_.size(); ++i) {
    check_stamp(i > 0 ? poses_[i - 1].timestamp : 0.0, poses_[i].timestamp, i);
  }
}

void Trajectory::push_back(const StampedPose& p) {
  check_stamp(empty() ? 0.0 : poses_.back().timestamp, p.timestamp, poses_.size());
  poses_.push_back(p);
}

std::vector<Vec3> Trajectory::positions() const {
  std::vector<Vec3> out;
  out.reserve(poses_.size());
  for (const auto& p : poses_) out.push_back(p.pose.translation);
  return out;
}

std::vector<double> Trajectory::timestamps() const {
  std::vector<double> out;
  out.reserve(poses_.size());
  for (const auto& p : poses_) out.push_back(p.timestamp);
  return out;
}

void write_tum(std::ostream& out, const Trajectory& traj) {
  char buf[320];
  for (const auto& sp : traj) {
    const auto& t = sp.pose.translation;
    const auto& q = sp.pose.rotation.quaternion();
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %.9g %.9g %.9g %.9g %.9g\n", sp.timestamp,
                  t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w());
    out << buf;
  }
}

void write_tum(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_tum(out, traj);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Trajectory read_tum(std::istream& in) {
  static constexpr const char* kFields[] = {"timestamp", "tx", "ty", "tz", "qx", "qy", "qz", "qw"};
  std::vector<StampedPose> poses;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;

    std::istringstream row(line);
    double v[8];
    for (int i = 0; i < 8; ++i) {
      std::string tok;
      if (!(row >> tok)) {
        throw ParseError(std::string("missing field '") + kFields[i] + "'", line_no, kFields[i]);
      }
      try {
        std::size_t used = 0;
        v[i] = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ParseError(std::string("field '") + kFields[i] + "' is not a number: " + tok,
                         line_no, kFields[i]);
      }
      if (!std::isfinite(v[i])) {
        throw ParseError(std::string("field '") + kFields[i] + "' is not finite", line_no,
                         kFields[i]);
      }
    }
    std::string extra;
    if (row >> extra) throw ParseError("unexpected trailing field: " + extra, line_no);

    Rotation r;
    try {
      r = Rotation::from_quaternion(Eigen::Quaterniond(v[7], v[4], v[5], v[6]));
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), line_no, "q");
    }
    if (!poses.empty() && !(v[0] > poses.back().timestamp)) {
      throw ParseError("timestamps not strictly increasing", line_no, "timestamp");
    }
    poses.push_back({v[0], Pose{r, Vec3(v[1], v[2], v[3])}});
  }
  return Trajectory(std::move(poses));
}

Trajectory read_tum(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_tum(in);
}

}  // namespace lsc
