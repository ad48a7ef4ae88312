#include "lsc/clustering.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace lsc {

struct ClusterStoreAccess {
  static std::vector<Cluster>& clusters(ClusterStore& s) { return s.clusters_; }
  static std::vector<std::optional<Membership>>& membership(ClusterStore& s) {
    return s.membership_;
  }
  static std::vector<std::string>& diagnostics(ClusterStore& s) { return s.diagnostics_; }
};

std::optional<Membership> ClusterStore::membership(ObservationId obs) const {
  if (obs < 0 || static_cast<std::size_t>(obs) >= membership_.size()) return std::nullopt;
  return membership_[static_cast<std::size_t>(obs)];
}

AssignResult assign(ClusterStore& store, const SegmentObservation& obs, const EstimatedMap& map,
                    double tau) {
  auto& clusters = ClusterStoreAccess::clusters(store);
  auto& membership = ClusterStoreAccess::membership(store);

  const Vec3 v = map.segment_vector(obs);
  if (!(v.norm() > 0.0)) {
    ClusterStoreAccess::diagnostics(store).push_back(
        "observation " + std::to_string(obs.id) + " discarded: zero-length segment");
    return {};
  }

  ClusterId best = -1;
  int best_sign = 1;
  double best_distance = 0.0;
  double best_threshold = 0.0;
  for (const Cluster& c : clusters) {
    const double d_plus = (v - c.center).norm();
    const double d_minus = (-v - c.center).norm();
    const double d = std::min(d_plus, d_minus);
    const double threshold = tau * c.center.norm();
    if (d < threshold && (best < 0 || d < best_distance)) {
      best = c.id;
      best_sign = d_plus <= d_minus ? 1 : -1;
      best_distance = d;
      best_threshold = threshold;
    }
  }

  AssignResult result;
  if (best < 0) {
    Cluster c;
    c.id = static_cast<ClusterId>(clusters.size());
    c.center = v;
    c.members.push_back({obs.id, 1, 0.0, 0.0, true});
    clusters.push_back(std::move(c));
    result = {clusters.back().id, 1, true};
  } else {
    Cluster& c = clusters[static_cast<std::size_t>(best)];
    c.members.push_back({obs.id, best_sign, best_distance, best_threshold, false});
    c.center += (best_sign * v - c.center) / static_cast<double>(c.members.size());
    result = {best, best_sign, false};
  }

  const auto slot = static_cast<std::size_t>(obs.id);
  if (membership.size() <= slot) membership.resize(slot + 1);
  membership[slot] = Membership{*result.cluster, result.sign};
  return result;
}

Vec3 batch_center(const Cluster& cluster, const EstimatedMap& map) {
  Vec3 sum = Vec3::Zero();
  for (const auto& m : cluster.members) {
    sum += m.sign * map.segment_vector(map.observations.at(static_cast<std::size_t>(m.observation)));
  }
  return sum / static_cast<double>(cluster.members.size());
}

void recompute_centers(ClusterStore& store, const EstimatedMap& map) {
  for (Cluster& c : ClusterStoreAccess::clusters(store)) c.center = batch_center(c, map);
}

int count_clusters(const ClusterStore& store, int min_cardinality) {
  return static_cast<int>(std::count_if(
      store.clusters().begin(), store.clusters().end(),
      [&](const Cluster& c) { return c.cardinality() >= min_cardinality; }));
}

std::string clusters_to_json(const ClusterStore& store) {
  using nlohmann::json;
  json out = json::array();
  for (const Cluster& c : store.clusters()) {
    json members = json::array();
    for (const auto& m : c.members) members.push_back({{"observation", m.observation}, {"sign", m.sign}});
    out.push_back({{"id", c.id},
                   {"center", {c.center.x(), c.center.y(), c.center.z()}},
                   {"cardinality", c.cardinality()},
                   {"members", std::move(members)}});
  }
  return out.dump(1) + "\n";
}

}  // namespace lsc
