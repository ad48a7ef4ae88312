#pragma once

// Reference computations used to check the library. Each one takes a different route
// from the production code: explicit matrices, brute force loops, finite differences.

#include <cmath>
#include <cstddef>
#include <map>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "lsc/cluster_opt.hpp"
#include "lsc/clustering.hpp"
#include "lsc/frontend.hpp"
#include "lsc/geometry.hpp"
#include "lsc/trajectory.hpp"

namespace lsc::oracle {

// 4x4 homogeneous matrix [sR T; 0 1] assembled from the rotation matrix entries.
inline Eigen::Matrix4d homogeneous(double s, const Eigen::Matrix3d& r, const Eigen::Vector3d& t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m(i, j) = s * r(i, j);
    m(i, 3) = t(i);
  }
  return m;
}

inline Eigen::Vector3d apply_h(const Eigen::Matrix4d& m, const Eigen::Vector3d& p) {
  Eigen::Vector4d h(p.x(), p.y(), p.z(), 1.0);
  Eigen::Vector4d out = m * h;
  return out.head<3>() / out(3);
}

// Rodrigues formula, independent of the quaternion path.
inline Eigen::Matrix3d rodrigues(Eigen::Vector3d axis, double angle) {
  axis.normalize();
  Eigen::Matrix3d k;
  k << 0, -axis.z(), axis.y(), axis.z(), 0, -axis.x(), -axis.y(), axis.x(), 0;
  return Eigen::Matrix3d::Identity() + std::sin(angle) * k + (1 - std::cos(angle)) * k * k;
}

struct RandomSim3 {
  double s;
  Eigen::Vector3d axis;
  double angle;
  Eigen::Vector3d t;

  Eigen::Matrix4d matrix() const { return homogeneous(s, rodrigues(axis, angle), t); }
  Sim3 sim3() const { return Sim3::make(s, Rotation::from_axis_angle(axis, angle), t); }
};

inline RandomSim3 random_sim3(std::mt19937_64& rng, double max_log_scale = 0.7) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  RandomSim3 r;
  r.s = std::exp(max_log_scale * u(rng));
  do {
    r.axis = Eigen::Vector3d(n(rng), n(rng), n(rng));
  } while (r.axis.norm() < 1e-3);
  r.angle = 3.0 * u(rng);
  r.t = Eigen::Vector3d(5 * u(rng), 5 * u(rng), 5 * u(rng));
  return r;
}

inline Eigen::Vector3d random_vec(std::mt19937_64& rng, double half_width = 1.0) {
  std::uniform_real_distribution<double> u(-half_width, half_width);
  return {u(rng), u(rng), u(rng)};
}

// Center of a cluster recomputed by summing every signed member vector.
inline Eigen::Vector3d brute_force_mean(const Cluster& c, const EstimatedMap& map) {
  long double sx = 0, sy = 0, sz = 0;
  for (const ClusterMember& m : c.members) {
    const SegmentObservation& o = map.observations[static_cast<std::size_t>(m.observation)];
    const Vec3& a = map.points[static_cast<std::size_t>(o.endpoint_ids[0])].position;
    const Vec3& b = map.points[static_cast<std::size_t>(o.endpoint_ids[1])].position;
    sx += m.sign * (static_cast<long double>(b.x()) - a.x());
    sy += m.sign * (static_cast<long double>(b.y()) - a.y());
    sz += m.sign * (static_cast<long double>(b.z()) - a.z());
  }
  const long double n = static_cast<long double>(c.members.size());
  return {static_cast<double>(sx / n), static_cast<double>(sy / n), static_cast<double>(sz / n)};
}

// Objective of the cluster problem written out term by term, componentwise.
inline double objective(const OptProblem& p, const std::map<PointId, Eigen::Vector3d>& x) {
  double total = 0.0;
  for (const ClusterEdge& e : p.edges) {
    const auto& p1 = x.at(e.endpoints[0]);
    const auto& p2 = x.at(e.endpoints[1]);
    for (int k = 0; k < 3; ++k) {
      const double r = e.center(k) - e.sign * (p2(k) - p1(k));
      total += r * r;
    }
  }
  for (std::size_t i = 0; i < p.variables.size(); ++i) {
    const auto& q = x.at(p.variables[i]);
    for (int k = 0; k < 3; ++k) {
      const double d = q(k) - p.anchors[i](k);
      total += p.lambda * d * d;
    }
  }
  return total;
}

// Central finite-difference Jacobian of the edge residual w.r.t. [p1; p2].
inline Eigen::Matrix<double, 3, 6> numeric_jacobian(const ClusterEdge& e, const Vec3& p1, const Vec3& p2,
                                                    double h = 1e-6) {
  Eigen::Matrix<double, 3, 6> j;
  for (int k = 0; k < 6; ++k) {
    Vec3 a1 = p1, a2 = p2, b1 = p1, b2 = p2;
    if (k < 3) {
      a1(k) += h;
      b1(k) -= h;
    } else {
      a2(k - 3) += h;
      b2(k - 3) -= h;
    }
    j.col(k) = (edge_residual(e, a1, a2) - edge_residual(e, b1, b2)) / (2 * h);
  }
  return j;
}

// Relative pose error by explicit 4x4 matrices over every index pair (i, i + delta).
inline double rpe_brute_force(const std::vector<Eigen::Matrix4d>& est, const std::vector<Eigen::Matrix4d>& gt,
                              int delta) {
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    for (std::size_t j = i; j < est.size(); ++j) {
      if (static_cast<int>(j - i) != delta) continue;
      const Eigen::Matrix4d rel_gt = gt[i].inverse() * gt[j];
      const Eigen::Matrix4d rel_est = est[i].inverse() * est[j];
      const Eigen::Matrix4d err = rel_gt.inverse() * rel_est;
      sum += err.block<3, 1>(0, 3).squaredNorm();
      ++count;
    }
  }
  return count ? std::sqrt(sum / count) : 0.0;
}

inline Eigen::Matrix4d pose_matrix(const Pose& p) {
  return homogeneous(1.0, p.rotation.matrix(), p.translation);
}

}  // namespace lsc::oracle
