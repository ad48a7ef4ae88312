#include "lsc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include <Eigen/Geometry>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_spline.h>
#include <nlohmann/json.hpp>

namespace lsc {

std::string to_string(AlignMode mode) {
  return mode == AlignMode::Rigid ? "rigid" : "similarity";
}

AlignMode parse_align_mode(const std::string& text) {
  if (text == "rigid") return AlignMode::Rigid;
  if (text == "similarity") return AlignMode::Similarity;
  throw std::invalid_argument("unknown alignment mode '" + text + "' (rigid|similarity)");
}

Association associate(const Trajectory& est, const Trajectory& gt, double tolerance) {
  Association out;
  std::size_t g = 0;
  for (std::size_t e = 0; e < est.size() && g < gt.size(); ++e) {
    const double t = est[e].timestamp;
    // gt is sorted: advance while the next sample is at least as close.
    while (g + 1 < gt.size() &&
           std::abs(gt[g + 1].timestamp - t) <= std::abs(gt[g].timestamp - t)) {
      ++g;
    }
    if (std::abs(gt[g].timestamp - t) <= tolerance) {
      out.est.push_back(e);
      out.gt.push_back(g);
      ++g;  // one-to-one
    }
  }
  return out;
}

Sim3 umeyama_alignment(std::span<const Vec3> src, std::span<const Vec3> dst, AlignMode mode) {
  if (src.size() != dst.size()) throw std::invalid_argument("alignment: point sets differ in size");
  if (src.size() < 3) throw std::invalid_argument("alignment: need at least 3 matched pairs");
  const auto n = static_cast<Eigen::Index>(src.size());
  Eigen::Matrix3Xd a(3, n), b(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a.col(i) = src[static_cast<std::size_t>(i)];
    b.col(i) = dst[static_cast<std::size_t>(i)];
  }
  const Eigen::Matrix4d m = Eigen::umeyama(a, b, mode == AlignMode::Similarity);
  const Mat3 sr = m.topLeftCorner<3, 3>();
  const double s = mode == AlignMode::Similarity ? std::cbrt(sr.determinant()) : 1.0;
  if (!(std::isfinite(s) && s > 0.0)) throw std::runtime_error("alignment: degenerate point set");
  Mat3 r = sr / s;
  // Re-orthonormalize against round-off before storing as a quaternion.
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  r = svd.matrixU() * svd.matrixV().transpose();
  return Sim3{s, Rotation::from_quaternion(Eigen::Quaterniond(r)), m.topRightCorner<3, 1>()};
}

namespace {

struct Matched {
  std::vector<Vec3> est;
  std::vector<Vec3> gt;
};

Matched matched_positions(const Trajectory& est, const Trajectory& gt, double tolerance) {
  const Association assoc = associate(est, gt, tolerance);
  Matched m;
  for (std::size_t k = 0; k < assoc.size(); ++k) {
    m.est.push_back(est[assoc.est[k]].pose.translation);
    m.gt.push_back(gt[assoc.gt[k]].pose.translation);
  }
  return m;
}

}  // namespace

Sim3 align(const Trajectory& est, const Trajectory& gt, AlignMode mode, double tolerance) {
  const Matched m = matched_positions(est, gt, tolerance);
  return umeyama_alignment(m.est, m.gt, mode);
}

double ate_with_alignment(const Trajectory& est, const Trajectory& gt, const Sim3& alignment,
                          double tolerance) {
  const Matched m = matched_positions(est, gt, tolerance);
  if (m.est.empty()) throw std::invalid_argument("ate: no matched poses");
  double sum = 0.0;
  for (std::size_t i = 0; i < m.est.size(); ++i) {
    sum += (m.gt[i] - alignment.apply(m.est[i])).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(m.est.size()));
}

double ate(const Trajectory& est, const Trajectory& gt, AlignMode mode, double tolerance) {
  return ate_with_alignment(est, gt, align(est, gt, mode, tolerance), tolerance);
}

double rpe(const Trajectory& est, const Trajectory& gt, int delta, double tolerance) {
  if (delta < 1) throw std::invalid_argument("rpe: delta must be >= 1");
  const Association assoc = associate(est, gt, tolerance);
  if (assoc.size() < 2) throw std::invalid_argument("rpe: need at least 2 matched poses");
  const auto d = static_cast<std::size_t>(delta);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i + d < assoc.size(); ++i) {
    const Pose& g0 = gt[assoc.gt[i]].pose;
    const Pose& g1 = gt[assoc.gt[i + d]].pose;
    const Pose& e0 = est[assoc.est[i]].pose;
    const Pose& e1 = est[assoc.est[i + d]].pose;
    const Pose err = (g0.inverse() * g1).inverse() * (e0.inverse() * e1);
    sum += err.translation.squaredNorm();
    ++count;
  }
  if (count == 0) return 0.0;
  return std::sqrt(sum / static_cast<double>(count));
}

std::vector<Vec3> spline_interpolate(std::span<const double> times, std::span<const Vec3> values,
                                     std::span<const double> queries) {
  if (times.size() != values.size()) throw std::invalid_argument("spline: size mismatch");
  if (times.size() < 4) throw std::invalid_argument("spline: need at least 4 control points");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      throw std::invalid_argument("spline: control timestamps must be strictly increasing");
    }
  }
  for (double q : queries) {
    if (!(q >= times.front() && q <= times.back())) {
      throw std::out_of_range("spline: query " + std::to_string(q) +
                              " outside control range (no extrapolation)");
    }
  }

  gsl_set_error_handler_off();
  using SplinePtr = std::unique_ptr<gsl_spline, decltype(&gsl_spline_free)>;
  using AccelPtr = std::unique_ptr<gsl_interp_accel, decltype(&gsl_interp_accel_free)>;

  std::vector<Vec3> out(queries.size(), Vec3::Zero());
  std::vector<double> coord(times.size());
  for (int axis = 0; axis < 3; ++axis) {
    for (std::size_t i = 0; i < values.size(); ++i) coord[i] = values[i][axis];
    SplinePtr spline(gsl_spline_alloc(gsl_interp_cspline, times.size()), gsl_spline_free);
    AccelPtr accel(gsl_interp_accel_alloc(), gsl_interp_accel_free);
    if (!spline || !accel) throw std::bad_alloc();
    if (gsl_spline_init(spline.get(), times.data(), coord.data(), times.size()) != GSL_SUCCESS) {
      throw std::runtime_error("spline: initialization failed");
    }
    for (std::size_t q = 0; q < queries.size(); ++q) {
      double y = 0.0;
      if (gsl_spline_eval_e(spline.get(), queries[q], accel.get(), &y) != GSL_SUCCESS) {
        throw std::runtime_error("spline: evaluation failed");
      }
      out[q][axis] = y;
    }
  }
  // Control timestamps reproduce control values bit-exactly.
  for (std::size_t q = 0; q < queries.size(); ++q) {
    auto it = std::lower_bound(times.begin(), times.end(), queries[q]);
    if (it != times.end() && *it == queries[q]) out[q] = values[static_cast<std::size_t>(it - times.begin())];
  }
  return out;
}

Trajectory interpolate_ground_truth(const Trajectory& sparse_gt, const Trajectory& est) {
  const std::vector<double> times = sparse_gt.timestamps();
  const std::vector<Vec3> values = sparse_gt.positions();
  if (times.empty()) throw std::invalid_argument("interpolate: empty ground truth");
  std::vector<double> queries;
  for (const auto& sp : est) {
    if (sp.timestamp >= times.front() && sp.timestamp <= times.back()) queries.push_back(sp.timestamp);
  }
  const std::vector<Vec3> pos = spline_interpolate(times, values, queries);
  std::vector<StampedPose> out;
  out.reserve(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    auto hi = std::lower_bound(times.begin(), times.end(), queries[q]);
    const auto k = static_cast<std::size_t>(hi - times.begin());
    Rotation r = sparse_gt[k].pose.rotation;
    if (times[k] != queries[q] && k > 0) {
      const double f = (queries[q] - times[k - 1]) / (times[k] - times[k - 1]);
      r = Rotation::slerp(sparse_gt[k - 1].pose.rotation, sparse_gt[k].pose.rotation, f);
    }
    out.push_back({queries[q], Pose{r, pos[q]}});
  }
  return Trajectory(std::move(out));
}

MetricsReport evaluate(const Trajectory& est, const Trajectory& gt, const EvalOptions& options) {
  const Trajectory dense_gt = options.interpolate_gt ? interpolate_ground_truth(gt, est) : gt;
  MetricsReport r;
  r.mode = options.mode;
  r.rpe_delta = options.rpe_delta;
  r.alignment = align(est, dense_gt, options.mode, options.tolerance);
  r.ate_rmse = ate_with_alignment(est, dense_gt, r.alignment, options.tolerance);
  r.n_pairs = associate(est, dense_gt, options.tolerance).size();

  std::vector<StampedPose> aligned;
  aligned.reserve(est.size());
  for (const auto& sp : est) aligned.push_back({sp.timestamp, apply_sim3(r.alignment, sp.pose)});
  r.rpe_rmse = rpe(Trajectory(std::move(aligned)), dense_gt, options.rpe_delta, options.tolerance);
  return r;
}

nlohmann::json metrics_to_json(const MetricsReport& report) {
  const auto& q = report.alignment.rotation.quaternion();
  const auto& t = report.alignment.translation;
  return {{"ate_rmse", report.ate_rmse},
          {"rpe_rmse", report.rpe_rmse},
          {"n_pairs", report.n_pairs},
          {"align_mode", to_string(report.mode)},
          {"rpe_delta", report.rpe_delta},
          {"alignment",
           {{"scale", report.alignment.scale},
            {"q", {q.w(), q.x(), q.y(), q.z()}},
            {"t", {t.x(), t.y(), t.z()}}}}};
}

}  // namespace lsc
