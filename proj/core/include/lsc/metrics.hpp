#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lsc/geometry.hpp"
#include "lsc/trajectory.hpp"

namespace lsc {

enum class AlignMode { Rigid, Similarity };

std::string to_string(AlignMode mode);
/// Accepts "rigid" or "similarity"; throws std::invalid_argument otherwise.
AlignMode parse_align_mode(const std::string& text);

inline constexpr double kDefaultMatchTolerance = 0.01;  // s
inline constexpr int kDefaultRpeDelta = 30;              // frames

/// Index pairs (est, gt) matched by nearest timestamp within `tolerance`,
/// one-to-one, greedily in time order.
struct Association {
  std::vector<std::size_t> est;
  std::vector<std::size_t> gt;
  std::size_t size() const { return est.size(); }
};

Association associate(const Trajectory& est, const Trajectory& gt,
                      double tolerance = kDefaultMatchTolerance);

/// Closed-form least-squares transform mapping `src` onto `dst`.
/// Rigid mode fixes the scale to 1. Throws std::invalid_argument with fewer than 3 pairs.
Sim3 umeyama_alignment(std::span<const Vec3> src, std::span<const Vec3> dst, AlignMode mode);

/// Transform taking est positions onto matched gt positions.
Sim3 align(const Trajectory& est, const Trajectory& gt, AlignMode mode,
           double tolerance = kDefaultMatchTolerance);

/// RMSE of |gt_i - alignment(est_i)| over matched pairs, with a given alignment.
double ate_with_alignment(const Trajectory& est, const Trajectory& gt, const Sim3& alignment,
                          double tolerance = kDefaultMatchTolerance);

/// ATE after the optimal alignment of the given mode.
double ate(const Trajectory& est, const Trajectory& gt, AlignMode mode,
           double tolerance = kDefaultMatchTolerance);

/// RMSE over i of the translation of (gt_i^-1 gt_{i+delta})^-1 (est_i^-1 est_{i+delta}),
/// where i runs over matched pairs. Throws with fewer than 2 matched poses or delta < 1.
double rpe(const Trajectory& est, const Trajectory& gt, int delta = kDefaultRpeDelta,
           double tolerance = kDefaultMatchTolerance);

/// Natural cubic spline through (times, values), one per coordinate, evaluated at
/// `queries`. Needs at least 4 control points; queries outside the control range throw.
std::vector<Vec3> spline_interpolate(std::span<const double> times, std::span<const Vec3> values,
                                     std::span<const double> queries);

/// Ground truth resampled at the est timestamps that fall inside its time range.
/// Positions use the spline; orientations are slerped between bracketing samples.
Trajectory interpolate_ground_truth(const Trajectory& sparse_gt, const Trajectory& est);

struct EvalOptions {
  AlignMode mode = AlignMode::Similarity;
  int rpe_delta = kDefaultRpeDelta;
  double tolerance = kDefaultMatchTolerance;
  bool interpolate_gt = false;
};

struct MetricsReport {
  double ate_rmse = 0.0;  // m
  double rpe_rmse = 0.0;  // m
  Sim3 alignment;
  std::size_t n_pairs = 0;
  AlignMode mode = AlignMode::Similarity;
  int rpe_delta = kDefaultRpeDelta;
};

/// ATE with the chosen alignment and RPE on the est trajectory after applying that
/// alignment (so similarity mode also corrects the global scale before RPE).
MetricsReport evaluate(const Trajectory& est, const Trajectory& gt, const EvalOptions& options = {});

nlohmann::json metrics_to_json(const MetricsReport& report);

}  // namespace lsc
