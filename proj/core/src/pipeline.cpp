#include "lsc/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace lsc {

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::Baseline: return "Baseline";
    case Mode::Seg: return "Seg";
    case Mode::SegGlobal: return "SegGlobal";
  }
  return "?";
}

Mode parse_mode(const std::string& text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "baseline") return Mode::Baseline;
  if (lower == "seg") return Mode::Seg;
  if (lower == "segglobal") return Mode::SegGlobal;
  throw std::invalid_argument("unknown mode '" + text + "' (Baseline|Seg|SegGlobal)");
}

void ScheduleConfig::validate() const {
  if (keyframe_interval < 1) throw std::invalid_argument("schedule: keyframe_interval must be >= 1");
  if (local_window < 1) throw std::invalid_argument("schedule: local_window must be >= 1");
  if (max_iterations < 0) throw std::invalid_argument("schedule: max_iterations must be >= 0");
  if (!(lambda >= 0.0)) throw std::invalid_argument("schedule: lambda must be >= 0");
  if (!(tau > 0.0)) throw std::invalid_argument("schedule: tau must be > 0");
  if (propagation_radius < 0) throw std::invalid_argument("schedule: propagation_radius must be >= 0");
}

PoseCorrection propagate_to_poses(std::span<const MapPoint> pre, std::span<const MapPoint> post,
                                  const Trajectory& trajectory, const PropagationOptions& options) {
  if (options.keyframe_interval < 1) throw std::invalid_argument("propagate: keyframe_interval must be >= 1");
  if (pre.size() != post.size()) throw std::invalid_argument("propagate: pre and post maps differ in size");
  for (std::size_t i = 0; i < pre.size(); ++i) {
    if (pre[i].id != post[i].id) throw std::invalid_argument("propagate: pre and post point ids differ");
  }

  PoseCorrection out;
  const auto interval = static_cast<std::size_t>(options.keyframe_interval);
  const std::size_t n_keyframes = trajectory.empty() ? 0 : (trajectory.size() - 1) / interval + 1;

  // A point is near keyframe k when it was first seen within `radius` frames of it.
  const long radius = options.radius < 0 ? static_cast<long>(interval) / 2 : options.radius;
  std::vector<std::vector<std::size_t>> moved(n_keyframes);
  for (std::size_t i = 0; i < pre.size(); ++i) {
    if (pre[i].position == post[i].position || pre[i].first_seen_frame < 0) continue;
    const long f = pre[i].first_seen_frame;
    const long lo = std::max(0L, (f - radius + static_cast<long>(interval) - 1) / static_cast<long>(interval));
    const long hi = (f + radius) / static_cast<long>(interval);
    for (long kf = lo; kf <= hi && kf < static_cast<long>(n_keyframes); ++kf) {
      moved[static_cast<std::size_t>(kf)].push_back(i);
    }
  }

  out.keyframe_corrections.assign(n_keyframes, Sim3::identity());
  out.fitted.assign(n_keyframes, false);
  std::vector<Vec3> src, dst;
  for (std::size_t kf = 0; kf < n_keyframes; ++kf) {
    const auto& idx = moved[kf];
    if (idx.empty()) continue;
    if (static_cast<int>(idx.size()) < options.min_points) {
      out.log.push_back("keyframe " + std::to_string(kf) + ": only " + std::to_string(idx.size()) +
                        " moved points, identity correction");
      continue;
    }
    src.clear();
    dst.clear();
    for (std::size_t i : idx) {
      src.push_back(pre[i].position);
      dst.push_back(post[i].position);
    }
    const Sim3 fit = umeyama_alignment(src, dst, AlignMode::Similarity);
    Sim3 c;
    c.scale = fit.scale;
    c.rotation = options.correct_rotation ? fit.rotation : Rotation();
    if (options.pivot == CorrectionPivot::LocalPoints) {
      Vec3 mu_src = Vec3::Zero(), mu_dst = Vec3::Zero();
      for (std::size_t k = 0; k < src.size(); ++k) {
        mu_src += src[k];
        mu_dst += dst[k];
      }
      mu_src /= static_cast<double>(src.size());
      mu_dst /= static_cast<double>(dst.size());
      c.translation = mu_dst - c.scale * (c.rotation * mu_src);
    }
    out.keyframe_corrections[kf] = c;
    out.fitted[kf] = true;
  }

  // Keyframes without their own fit hold the latest fitted correction before them.
  std::vector<Sim3> applied(n_keyframes, Sim3::identity());
  Sim3 held = Sim3::identity();
  for (std::size_t kf = 0; kf < n_keyframes; ++kf) {
    if (out.fitted[kf]) held = out.keyframe_corrections[kf];
    applied[kf] = held;
  }

  std::vector<StampedPose> poses(trajectory.begin(), trajectory.end());
  for (std::size_t f = 0; f < poses.size(); ++f) {
    const std::size_t kf = f / interval;
    const std::size_t offset = f % interval;
    Sim3 c = applied[kf];
    if (offset != 0 && kf + 1 < n_keyframes) {
      c = interpolate(applied[kf], applied[kf + 1],
                      static_cast<double>(offset) / static_cast<double>(interval));
    }
    poses[f].pose = apply_sim3(c, poses[f].pose);
    if (f + 1 == poses.size()) out.latest = c;
  }
  out.trajectory = Trajectory(std::move(poses));
  return out;
}

namespace {

bool is_identity(const Sim3& s) {
  return s.scale == 1.0 && s.translation == Vec3::Zero() &&
         s.rotation.quaternion().coeffs() == Eigen::Quaterniond::Identity().coeffs();
}

}  // namespace

RunResult run(const World& world, const FrontendConfig& frontend, const ScheduleConfig& schedule,
              const EvalOptions& eval) {
  schedule.validate();
  FrontEnd fe(world, frontend.drift, frontend.observation);

  RunResult result;
  result.mode = schedule.mode;
  result.ground_truth = world.gt_trajectory;

  const PropagationOptions propagation{schedule.keyframe_interval, schedule.pivot,
                                       schedule.correct_rotation, 3, schedule.propagation_radius};
  Sim3 feedback = Sim3::identity();
  std::vector<StampedPose> corrected;
  corrected.reserve(world.gt_trajectory.size());

  auto optimize = [&](const Scope& scope, int frame) {
    EstimatedMap& map = fe.mutable_map();
    OptProblem problem = build_problem(result.clusters, map, scope, schedule.lambda);
    if (problem.empty()) return;
    problem.max_iterations = schedule.max_iterations;

    const std::vector<MapPoint> pre = map.points;
    SolveResult solved = solve(problem);
    for (const auto& [id, pos] : solved.positions) map.point(id).position = pos;
    recompute_centers(result.clusters, map);

    PoseCorrection pc = propagate_to_poses(pre, map.points, Trajectory(corrected), propagation);
    corrected.assign(pc.trajectory.begin(), pc.trajectory.end());
    if (!is_identity(pc.latest)) feedback = compose_sim3(pc.latest, feedback);
    for (auto& line : pc.log) result.log.push_back("frame " + std::to_string(frame) + ": " + line);

    RoundRecord rec;
    rec.frame = frame;
    rec.scope = scope.kind;
    rec.edges = problem.edges.size();
    rec.variables = problem.variables.size();
    rec.report = std::move(solved.report);
    rec.fitted_keyframes = static_cast<int>(std::count(pc.fitted.begin(), pc.fitted.end(), true));
    result.rounds.push_back(std::move(rec));
  };

  while (!fe.done()) {
    const FrontEnd::FrameOutput frame = fe.step(feedback);
    corrected.push_back(fe.map().est_trajectory[static_cast<std::size_t>(frame.frame)]);

    for (ObservationId id = frame.first_new_observation; id < frame.end_new_observation; ++id) {
      const auto& obs = fe.map().observations[static_cast<std::size_t>(id)];
      assign(result.clusters, obs, fe.map(), schedule.tau);
    }

    const bool keyframe = frame.frame > 0 && frame.frame % schedule.keyframe_interval == 0;
    if (schedule.mode == Mode::Baseline || !keyframe) continue;

    const int first = frame.frame - schedule.local_window * schedule.keyframe_interval;
    optimize(Scope::local(std::max(0, first)), frame.frame);
    if (schedule.mode == Mode::SegGlobal) optimize(Scope::global(), frame.frame);
  }

  for (const auto& d : result.clusters.diagnostics()) result.log.push_back(d);
  result.map = fe.map();
  result.raw = fe.raw_trajectory();
  result.corrected = Trajectory(std::move(corrected));
  result.metrics = evaluate(result.corrected, result.ground_truth, eval);
  return result;
}

nlohmann::json run_manifest(const RunResult& result, const FrontendConfig& frontend,
                            const ScheduleConfig& schedule) {
  using nlohmann::json;
  json rounds = json::array();
  for (const auto& r : result.rounds) {
    rounds.push_back({{"frame", r.frame},
                      {"scope", r.scope == Scope::Kind::Global ? "global" : "local"},
                      {"edges", r.edges},
                      {"variables", r.variables},
                      {"fitted_keyframes", r.fitted_keyframes},
                      {"report", report_to_json(r.report)}});
  }
  const auto& d = frontend.drift;
  const auto& o = frontend.observation;
  return {
      {"mode", to_string(result.mode)},
      {"schedule",
       {{"keyframe_interval", schedule.keyframe_interval},
        {"local_window", schedule.local_window},
        {"max_iterations", schedule.max_iterations},
        {"lambda", schedule.lambda},
        {"tau", schedule.tau},
        {"pivot", schedule.pivot == CorrectionPivot::MapOrigin ? "map_origin" : "local_points"},
        {"correct_rotation", schedule.correct_rotation},
        {"propagation_radius", schedule.propagation_radius}}},
      {"drift",
       {{"scale_sigma", d.scale_sigma},
        {"rot_sigma", d.rot_sigma},
        {"trans_sigma", d.trans_sigma},
        {"seed", d.seed}}},
      {"observation",
       {{"detect_prob", o.detect_prob},
        {"endpoint_noise_sigma", o.endpoint_noise_sigma},
        {"max_range", o.max_range},
        {"min_segment_length", o.min_segment_length},
        {"seed", o.seed}}},
      {"clusters",
       {{"count", result.clusters.size()},
        {"multi_member", count_clusters(result.clusters, 2)},
        {"discarded_observations", result.clusters.diagnostics().size()}}},
      {"map", {{"points", result.map.points.size()}, {"observations", result.map.observations.size()}}},
      {"rounds", std::move(rounds)},
      {"metrics", metrics_to_json(result.metrics)},
      {"log", result.log}};
}

}  // namespace lsc
