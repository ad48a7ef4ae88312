#include "lsc/frontend.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lsc/errors.hpp"

namespace lsc {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

bool non_negative(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

void DriftConfig::validate() const {
  require(non_negative(scale_sigma), "drift: scale_sigma must be >= 0");
  require(non_negative(rot_sigma), "drift: rot_sigma must be >= 0");
  require(non_negative(trans_sigma), "drift: trans_sigma must be >= 0");
}

void ObservationConfig::validate() const {
  require(std::isfinite(detect_prob) && detect_prob >= 0.0 && detect_prob <= 1.0,
          "observation: detect_prob must be in [0, 1]");
  require(non_negative(endpoint_noise_sigma), "observation: endpoint_noise_sigma must be >= 0");
  require(std::isfinite(max_range) && max_range > 0.0, "observation: max_range must be > 0");
  require(non_negative(min_segment_length), "observation: min_segment_length must be >= 0");
}

DriftState DriftState::start(const DriftConfig& config) {
  config.validate();
  return DriftState{Sim3::identity(), config, std::mt19937_64(config.seed)};
}

DriftState step_drift(DriftState d) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double log_s = d.config.scale_sigma * gauss(d.rng);
  Vec3 axis(gauss(d.rng), gauss(d.rng), gauss(d.rng));
  const double angle = d.config.rot_sigma * gauss(d.rng);
  Vec3 trans(gauss(d.rng), gauss(d.rng), gauss(d.rng));
  trans *= d.config.trans_sigma;
  if (axis.norm() == 0.0) axis = Vec3::UnitZ();

  const Sim3 increment{std::exp(log_s), Rotation::from_axis_angle(axis, angle), trans};
  d.cumulative = compose_sim3(d.cumulative, increment);
  return d;
}

const MapPoint& EstimatedMap::point(PointId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= points.size()) {
    throw std::out_of_range("map point " + std::to_string(id) + " does not exist");
  }
  return points[static_cast<std::size_t>(id)];
}

MapPoint& EstimatedMap::point(PointId id) {
  return const_cast<MapPoint&>(std::as_const(*this).point(id));
}

Vec3 EstimatedMap::segment_vector(const SegmentObservation& obs) const {
  return lsc::segment_vector(point(obs.endpoint_ids[0]).position,
                             point(obs.endpoint_ids[1]).position);
}

void EstimatedMap::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].id != static_cast<PointId>(i)) {
      throw InvariantError("map point ids must be dense indices");
    }
  }
  for (const auto& obs : observations) {
    for (PointId id : obs.endpoint_ids) {
      if (id < 0 || static_cast<std::size_t>(id) >= points.size()) {
        throw InvariantError("observation " + std::to_string(obs.id) +
                             " references missing point " + std::to_string(id));
      }
    }
    if (obs.endpoint_ids[0] == obs.endpoint_ids[1]) {
      throw InvariantError("observation " + std::to_string(obs.id) + " has identical endpoints");
    }
  }
}

FrontEnd::FrontEnd(const World& world, const DriftConfig& drift, const ObservationConfig& obs)
    : world_(&world), obs_(obs), drift_(DriftState::start(drift)), obs_rng_(obs.seed) {
  obs_.validate();
  world.validate();

  // Endpoints shared between segments (door corners) become one map point.
  std::map<std::array<double, 3>, int> index;
  auto endpoint = [&](const Vec3& p) {
    const std::array<double, 3> key{p.x(), p.y(), p.z()};
    auto [it, inserted] = index.emplace(key, static_cast<int>(world_endpoints_.size()));
    if (inserted) world_endpoints_.push_back(p);
    return it->second;
  };
  for (const auto& seg : world.segments) {
    segment_endpoints_.push_back({endpoint(seg.a), endpoint(seg.b)});
  }
  endpoint_to_point_.assign(world_endpoints_.size(), -1);
}

FrontEnd::FrameOutput FrontEnd::step(const Sim3& correction) {
  if (done()) throw std::logic_error("front end: no frames left");
  const std::size_t k = next_frame_;
  if (k > 0) drift_ = step_drift(std::move(drift_));

  const StampedPose& gt = world_->gt_trajectory[k];
  const Sim3 effective = compose_sim3(correction, drift_.cumulative);
  raw_.push_back({gt.timestamp, apply_sim3(drift_.cumulative, gt.pose)});
  map_.est_trajectory.push_back({gt.timestamp, apply_sim3(effective, gt.pose)});

  FrameOutput out;
  out.frame = static_cast<int>(k);
  out.first_new_observation = static_cast<ObservationId>(map_.observations.size());

  const Vec3 cam = gt.pose.translation;
  const Vec3 forward = gt.pose.rotation * Vec3::UnitX();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (std::size_t i = 0; i < world_->segments.size(); ++i) {
    const WorldSegment& seg = world_->segments[i];
    if (seg.vector().norm() < obs_.min_segment_length) continue;
    const Vec3 to_mid = 0.5 * (seg.a + seg.b) - cam;
    if (to_mid.norm() > obs_.max_range || forward.dot(to_mid) <= 0.0) continue;
    if (!(unit(obs_rng_) < obs_.detect_prob)) continue;

    SegmentObservation o;
    o.id = static_cast<ObservationId>(map_.observations.size());
    o.frame = static_cast<int>(k);
    o.world_segment_index = static_cast<int>(i);
    for (int e = 0; e < 2; ++e) {
      const int w = segment_endpoints_[i][static_cast<std::size_t>(e)];
      PointId& pid = endpoint_to_point_[static_cast<std::size_t>(w)];
      if (pid < 0) {
        Vec3 noise(gauss(obs_rng_), gauss(obs_rng_), gauss(obs_rng_));
        noise *= obs_.endpoint_noise_sigma;
        pid = static_cast<PointId>(map_.points.size());
        map_.points.push_back({pid, effective.apply(world_endpoints_[static_cast<std::size_t>(w)]) + noise,
                               static_cast<int>(k)});
      }
      o.endpoint_ids[static_cast<std::size_t>(e)] = pid;
    }
    map_.observations.push_back(o);
  }

  out.end_new_observation = static_cast<ObservationId>(map_.observations.size());
  ++next_frame_;
  return out;
}

EstimatedMap simulate(const World& world, const DriftConfig& drift, const ObservationConfig& obs) {
  FrontEnd fe(world, drift, obs);
  while (!fe.done()) fe.step();
  return fe.map();
}

std::string map_to_json(const EstimatedMap& map) {
  using nlohmann::json;
  json points = json::array();
  for (const auto& p : map.points) {
    points.push_back({{"id", p.id},
                      {"position", {p.position.x(), p.position.y(), p.position.z()}},
                      {"first_seen_frame", p.first_seen_frame}});
  }
  json obs = json::array();
  for (const auto& o : map.observations) {
    obs.push_back({{"id", o.id},
                   {"endpoints", {o.endpoint_ids[0], o.endpoint_ids[1]}},
                   {"frame", o.frame},
                   {"world_segment", o.world_segment_index}});
  }
  json traj = json::array();
  for (const auto& sp : map.est_trajectory) {
    const auto& q = sp.pose.rotation.quaternion();
    const auto& t = sp.pose.translation;
    traj.push_back({{"t", sp.timestamp},
                    {"q", {q.w(), q.x(), q.y(), q.z()}},
                    {"p", {t.x(), t.y(), t.z()}}});
  }
  json root;
  root["points"] = std::move(points);
  root["observations"] = std::move(obs);
  root["trajectory"] = std::move(traj);
  return root.dump(1) + "\n";
}

}  // namespace lsc
