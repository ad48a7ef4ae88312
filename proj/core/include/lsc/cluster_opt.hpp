#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "lsc/clustering.hpp"
#include "lsc/frontend.hpp"

namespace lsc {

using PositionMap = std::map<PointId, Vec3>;

/// Ties one observed segment to its cluster center: e = center - sign * (p2 - p1).
struct ClusterEdge {
  ClusterId cluster = 0;
  ObservationId observation = 0;
  std::array<PointId, 2> endpoints{};
  int sign = 1;
  Vec3 center = Vec3::Zero();  // frozen when the problem is built
};

Vec3 edge_residual(const ClusterEdge& edge, const Vec3& p1, const Vec3& p2);
/// d e / d [p1; p2] = [sign * I, -sign * I].
Eigen::Matrix<double, 3, 6> edge_jacobian(const ClusterEdge& edge);

/// Least squares over endpoint positions:
///   sum_edges |e|^2 + lambda * sum_points |p - p0|^2
/// The anchor term fixes the translation gauge the cluster edges leave free.
struct OptProblem {
  std::vector<PointId> variables;  // sorted, unique
  std::vector<Vec3> anchors;       // p0, aligned with `variables`
  std::vector<ClusterEdge> edges;
  double lambda = 1e-3;
  int max_iterations = 10;
  double initial_damping = 1e-4;

  bool empty() const { return edges.empty(); }
  /// Index into `variables`, or -1.
  int index_of(PointId id) const;
  PositionMap anchor_positions() const;
};

struct Scope {
  enum class Kind { Local, Global };
  Kind kind = Kind::Global;
  int first_frame = 0;  // local scope keeps observations from this frame on

  static Scope global() { return {}; }
  static Scope local(int first_frame) { return {Kind::Local, first_frame}; }
  bool contains(const SegmentObservation& obs) const {
    return kind == Kind::Global || obs.frame >= first_frame;
  }
};

/// One edge per in-scope cluster member; centers are copied from the store.
OptProblem build_problem(const ClusterStore& store, const EstimatedMap& map, const Scope& scope,
                         double lambda = 1e-3);

/// Exact objective. Throws std::out_of_range naming the first endpoint missing from `positions`.
double evaluate_objective(const OptProblem& problem, const PositionMap& positions);

struct OptReport {
  double initial_objective = 0.0;
  double final_objective = 0.0;
  int iterations = 0;
  /// Objective at the start and after every accepted step.
  std::vector<double> objective_trace;
  /// Damping value in effect after each iteration.
  std::vector<double> damping_trace;
  std::vector<std::string> diagnostics;
};

nlohmann::json report_to_json(const OptReport& report);

struct SolveResult {
  PositionMap positions;
  OptReport report;
};

/// Called with the positions and solver-side objective of every accepted iterate.
using IterateObserver = std::function<void(const PositionMap&, double)>;

/// Levenberg-Marquardt: damping starts at problem.initial_damping, x10 on a rejected
/// step and x0.5 on an accepted one. A step is accepted only if the objective drops.
SolveResult solve(const OptProblem& problem, const IterateObserver& observer = {});

}  // namespace lsc
