#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace lsc {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Absolute tolerance used for geometric identities unless a test overrides it.
inline constexpr double kGeometryTolerance = 1e-9;

/// SO(3) element stored as a unit quaternion.
class Rotation {
 public:
  Rotation() = default;

  /// Normalizes `q`; throws std::invalid_argument on a zero or non-finite quaternion.
  static Rotation from_quaternion(const Eigen::Quaterniond& q);
  /// `m` must be orthonormal with det +1 (checked to kGeometryTolerance).
  static Rotation from_matrix(const Mat3& m);
  /// Rotation of `angle` radians about `axis` (need not be normalized).
  static Rotation from_axis_angle(const Vec3& axis, double angle);
  static Rotation about_z(double angle) { return from_axis_angle(Vec3::UnitZ(), angle); }

  const Eigen::Quaterniond& quaternion() const { return q_; }
  Mat3 matrix() const { return q_.toRotationMatrix(); }
  Rotation inverse() const;
  /// Angle of the rotation in [0, pi].
  double angle() const;

  Vec3 operator*(const Vec3& v) const { return q_ * v; }
  Rotation operator*(const Rotation& other) const;

  /// Spherical interpolation, t in [0, 1].
  static Rotation slerp(const Rotation& a, const Rotation& b, double t);

 private:
  explicit Rotation(const Eigen::Quaterniond& q) : q_(q) {}
  Eigen::Quaterniond q_ = Eigen::Quaterniond::Identity();
};

/// Rigid camera pose: x_world = rotation * x_cam + translation.
struct Pose {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Pose inverse() const;
  Pose operator*(const Pose& other) const;
};

/// Similarity transform p -> s * R * p + T.
struct Sim3 {
  double scale = 1.0;
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  static Sim3 identity() { return {}; }
  /// Throws std::invalid_argument unless scale is finite and positive.
  static Sim3 make(double scale, const Rotation& rotation, const Vec3& translation);

  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
  Sim3 inverse() const;
  /// Homogeneous 4x4 form [sR T; 0 1].
  Eigen::Matrix4d matrix() const;
};

Vec3 apply_sim3(const Sim3& t, const Vec3& p);

/// apply(compose_sim3(a, b), p) == apply(a, apply(b, p)).
Sim3 compose_sim3(const Sim3& a, const Sim3& b);

inline Sim3 operator*(const Sim3& a, const Sim3& b) { return compose_sim3(a, b); }

/// Acts on a camera pose: position is mapped as a point, orientation is pre-rotated.
Pose apply_sim3(const Sim3& t, const Pose& pose);

/// Interpolates log-scale and translation linearly and rotation by slerp.
Sim3 interpolate(const Sim3& a, const Sim3& b, double t);

/// Segment vector p2 - p1.
inline Vec3 segment_vector(const Vec3& p1, const Vec3& p2) { return p2 - p1; }

inline bool is_finite(const Vec3& v) { return v.allFinite(); }

}  // namespace lsc
