#include "lsc/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace lsc {

Rotation Rotation::from_quaternion(const Eigen::Quaterniond& q) {
  const double n = q.norm();
  if (!std::isfinite(n) || n == 0.0) {
    throw std::invalid_argument("rotation: quaternion must be finite and non-zero");
  }
  // Keep already-unit input bit-identical so serialized rotations round-trip.
  if (std::abs(n - 1.0) <= 1e-12) return Rotation(q);
  return Rotation(q.normalized());
}

Rotation Rotation::from_matrix(const Mat3& m) {
  if (!m.allFinite()) throw std::invalid_argument("rotation: matrix has non-finite entries");
  if ((m * m.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > kGeometryTolerance) {
    throw std::invalid_argument("rotation: matrix is not orthonormal");
  }
  if (std::abs(m.determinant() - 1.0) > kGeometryTolerance) {
    throw std::invalid_argument("rotation: matrix determinant is not +1");
  }
  return Rotation(Eigen::Quaterniond(m).normalized());
}

Rotation Rotation::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (!std::isfinite(angle) || !std::isfinite(n) || n == 0.0) {
    throw std::invalid_argument("rotation: axis must be non-zero and angle finite");
  }
  const double half = 0.5 * angle;
  const Vec3 xyz = std::sin(half) * (axis / n);
  return Rotation(Eigen::Quaterniond(std::cos(half), xyz.x(), xyz.y(), xyz.z()));
}

Rotation Rotation::inverse() const { return Rotation(q_.conjugate()); }

double Rotation::angle() const {
  const double w = std::min(1.0, std::abs(q_.w()));
  return 2.0 * std::acos(w);
}

Rotation Rotation::operator*(const Rotation& other) const {
  // Renormalize so long drift chains stay on the manifold.
  return Rotation((q_ * other.q_).normalized());
}

Rotation Rotation::slerp(const Rotation& a, const Rotation& b, double t) {
  return Rotation(a.q_.slerp(t, b.q_).normalized());
}

Pose Pose::inverse() const {
  const Rotation r_inv = rotation.inverse();
  return Pose{r_inv, -(r_inv * translation)};
}

Pose Pose::operator*(const Pose& other) const {
  return Pose{rotation * other.rotation, rotation * other.translation + translation};
}

Sim3 Sim3::make(double scale, const Rotation& rotation, const Vec3& translation) {
  if (!std::isfinite(scale) || scale <= 0.0) {
    throw std::invalid_argument("sim3: scale must be finite and positive");
  }
  if (!translation.allFinite()) throw std::invalid_argument("sim3: translation must be finite");
  return Sim3{scale, rotation, translation};
}

Sim3 Sim3::inverse() const {
  const Rotation r_inv = rotation.inverse();
  const double s_inv = 1.0 / scale;
  return Sim3{s_inv, r_inv, -s_inv * (r_inv * translation)};
}

Eigen::Matrix4d Sim3::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = scale * rotation.matrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Vec3 apply_sim3(const Sim3& t, const Vec3& p) { return t.apply(p); }

Sim3 compose_sim3(const Sim3& a, const Sim3& b) {
  return Sim3{a.scale * b.scale, a.rotation * b.rotation,
              a.scale * (a.rotation * b.translation) + a.translation};
}

Pose apply_sim3(const Sim3& t, const Pose& pose) {
  return Pose{t.rotation * pose.rotation, t.apply(pose.translation)};
}

Sim3 interpolate(const Sim3& a, const Sim3& b, double t) {
  const double log_s = (1.0 - t) * std::log(a.scale) + t * std::log(b.scale);
  return Sim3{std::exp(log_s), Rotation::slerp(a.rotation, b.rotation, t),
              (1.0 - t) * a.translation + t * b.translation};
}

}  // namespace lsc
