#include "lsc/cluster_opt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <nlohmann/json.hpp>

namespace lsc {

namespace {

constexpr int kMaxRetries = 12;

using Positions = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

struct IndexedEdge {
  int i;  // first endpoint
  int j;  // second endpoint
  double sign;
  Eigen::RowVector3d center;
};

}  // namespace

Vec3 edge_residual(const ClusterEdge& edge, const Vec3& p1, const Vec3& p2) {
  return edge.center - edge.sign * (p2 - p1);
}

Eigen::Matrix<double, 3, 6> edge_jacobian(const ClusterEdge& edge) {
  Eigen::Matrix<double, 3, 6> j;
  j.leftCols<3>() = edge.sign * Mat3::Identity();
  j.rightCols<3>() = -edge.sign * Mat3::Identity();
  return j;
}

int OptProblem::index_of(PointId id) const {
  auto it = std::lower_bound(variables.begin(), variables.end(), id);
  if (it == variables.end() || *it != id) return -1;
  return static_cast<int>(it - variables.begin());
}

PositionMap OptProblem::anchor_positions() const {
  PositionMap out;
  for (std::size_t k = 0; k < variables.size(); ++k) out.emplace(variables[k], anchors[k]);
  return out;
}

OptProblem build_problem(const ClusterStore& store, const EstimatedMap& map, const Scope& scope,
                         double lambda) {
  if (!(std::isfinite(lambda) && lambda >= 0.0)) {
    throw std::invalid_argument("build_problem: lambda must be >= 0");
  }
  OptProblem problem;
  problem.lambda = lambda;
  for (const Cluster& c : store.clusters()) {
    for (const ClusterMember& m : c.members) {
      const SegmentObservation& obs = map.observations.at(static_cast<std::size_t>(m.observation));
      if (!scope.contains(obs)) continue;
      problem.edges.push_back({c.id, obs.id, obs.endpoint_ids, m.sign, c.center});
      problem.variables.push_back(obs.endpoint_ids[0]);
      problem.variables.push_back(obs.endpoint_ids[1]);
    }
  }
  std::sort(problem.variables.begin(), problem.variables.end());
  problem.variables.erase(std::unique(problem.variables.begin(), problem.variables.end()),
                          problem.variables.end());
  problem.anchors.reserve(problem.variables.size());
  for (PointId id : problem.variables) problem.anchors.push_back(map.point(id).position);
  return problem;
}

double evaluate_objective(const OptProblem& problem, const PositionMap& positions) {
  auto lookup = [&](PointId id) -> const Vec3& {
    auto it = positions.find(id);
    if (it == positions.end()) {
      throw std::out_of_range("evaluate_objective: no position for endpoint " + std::to_string(id));
    }
    return it->second;
  };
  double total = 0.0;
  for (const ClusterEdge& e : problem.edges) {
    total += edge_residual(e, lookup(e.endpoints[0]), lookup(e.endpoints[1])).squaredNorm();
  }
  if (problem.lambda > 0.0) {
    for (std::size_t k = 0; k < problem.variables.size(); ++k) {
      total += problem.lambda * (lookup(problem.variables[k]) - problem.anchors[k]).squaredNorm();
    }
  }
  return total;
}

nlohmann::json report_to_json(const OptReport& report) {
  return {{"initial_objective", report.initial_objective},
          {"final_objective", report.final_objective},
          {"iterations", report.iterations},
          {"objective_trace", report.objective_trace},
          {"damping_trace", report.damping_trace},
          {"diagnostics", report.diagnostics}};
}

SolveResult solve(const OptProblem& problem, const IterateObserver& observer) {
  const auto n = static_cast<Eigen::Index>(problem.variables.size());
  if (problem.anchors.size() != problem.variables.size()) {
    throw std::invalid_argument("solve: anchors and variables differ in size");
  }

  std::vector<IndexedEdge> edges;
  edges.reserve(problem.edges.size());
  for (const ClusterEdge& e : problem.edges) {
    const int i = problem.index_of(e.endpoints[0]);
    const int j = problem.index_of(e.endpoints[1]);
    if (i < 0 || j < 0) {
      throw std::invalid_argument("solve: edge endpoint is not a problem variable");
    }
    edges.push_back({i, j, static_cast<double>(e.sign), e.center.transpose()});
  }

  Positions anchors(n, 3);
  for (Eigen::Index k = 0; k < n; ++k) anchors.row(k) = problem.anchors[static_cast<std::size_t>(k)].transpose();
  Positions x = anchors;

  const double lambda = problem.lambda;
  Eigen::VectorXd residuals(static_cast<Eigen::Index>(3 * edges.size()) + (lambda > 0.0 ? 3 * n : 0));
  auto stack_residuals = [&](const Positions& p) {
    Eigen::Index r = 0;
    for (const IndexedEdge& e : edges) {
      residuals.segment<3>(r) = (e.center - e.sign * (p.row(e.j) - p.row(e.i))).transpose();
      r += 3;
    }
    if (lambda > 0.0) {
      const double w = std::sqrt(lambda);
      for (Eigen::Index k = 0; k < n; ++k) {
        residuals.segment<3>(r) = w * (p.row(k) - anchors.row(k)).transpose();
        r += 3;
      }
    }
    return residuals.squaredNorm();
  };

  // Every edge Jacobian block is +-I, so J^T J = (L + lambda I) kron I_3 with L the
  // graph Laplacian of the edges. The three coordinates share one n x n factorization.
  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(n, n);
  for (const IndexedEdge& e : edges) {
    normal(e.i, e.i) += 1.0;
    normal(e.j, e.j) += 1.0;
    normal(e.i, e.j) -= 1.0;
    normal(e.j, e.i) -= 1.0;
  }
  normal.diagonal().array() += lambda;

  auto gradient = [&](const Positions& p) {
    Positions g = Positions::Zero(n, 3);
    for (const IndexedEdge& e : edges) {
      const Eigen::RowVector3d r = e.center - e.sign * (p.row(e.j) - p.row(e.i));
      g.row(e.i) += e.sign * r;
      g.row(e.j) -= e.sign * r;
    }
    if (lambda > 0.0) g += lambda * (p - anchors);
    return g;
  };

  auto as_map = [&](const Positions& p) {
    PositionMap out;
    for (Eigen::Index k = 0; k < n; ++k) {
      out.emplace_hint(out.end(), problem.variables[static_cast<std::size_t>(k)], p.row(k).transpose());
    }
    return out;
  };

  SolveResult result;
  OptReport& report = result.report;
  double objective = stack_residuals(x);
  report.initial_objective = objective;
  report.objective_trace.push_back(objective);

  double mu = problem.initial_damping;
  Eigen::LDLT<Eigen::MatrixXd> ldlt;
  for (int iter = 0; iter < problem.max_iterations && n > 0; ++iter) {
    const Positions g = gradient(x);
    if (objective == 0.0 || g.cwiseAbs().maxCoeff() == 0.0) break;

    bool accepted = false;
    for (int attempt = 0; attempt < kMaxRetries && !accepted; ++attempt) {
      Eigen::MatrixXd damped = normal;
      damped.diagonal().array() += mu;
      ldlt.compute(damped);
      Positions step(n, 3);
      bool ok = ldlt.info() == Eigen::Success && ldlt.isPositive();
      if (ok) {
        step = ldlt.solve(-Eigen::MatrixXd(g));
        const double pivot_max = ldlt.vectorD().cwiseAbs().maxCoeff();
        ok = step.allFinite() &&
             ldlt.vectorD().cwiseAbs().minCoeff() > 1e-14 * std::max(1.0, pivot_max);
      }
      if (!ok) {
        report.diagnostics.push_back("iteration " + std::to_string(iter) +
                                     ": singular normal equations at damping " + std::to_string(mu) +
                                     "; step rejected");
        mu = std::max(mu * 10.0, 1e-4);
        continue;
      }
      const Positions candidate = x + step;
      const double candidate_objective = stack_residuals(candidate);
      if (candidate_objective < objective) {
        x = candidate;
        objective = candidate_objective;
        mu *= 0.5;
        accepted = true;
        report.objective_trace.push_back(objective);
        if (observer) observer(as_map(x), objective);
      } else {
        mu *= 10.0;
      }
    }
    report.iterations = iter + 1;
    report.damping_trace.push_back(mu);
    if (!accepted) {
      report.diagnostics.push_back("iteration " + std::to_string(iter) +
                                   ": no decreasing step found; stopping");
      break;
    }
  }

  report.final_objective = objective;
  result.positions = as_map(x);
  return result;
}

}  // namespace lsc
