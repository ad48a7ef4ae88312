#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lsc/frontend.hpp"
#include "lsc/geometry.hpp"

namespace lsc {

using ClusterId = int;

/// Default membership threshold relative to the center length.
inline constexpr double kDefaultClusterTau = 0.005;

struct ClusterMember {
  ObservationId observation = 0;
  int sign = 1;  // orientation that brought the segment closest to the center
  /// Min-sign distance and threshold recorded when the member joined. Zero for a founder.
  double insertion_distance = 0.0;
  double insertion_threshold = 0.0;
  bool founder = false;
};

/// Running mean of the signed segment vectors of its members.
struct Cluster {
  ClusterId id = 0;
  Vec3 center = Vec3::Zero();
  std::vector<ClusterMember> members;

  int cardinality() const { return static_cast<int>(members.size()); }
};

struct Membership {
  ClusterId cluster = 0;
  int sign = 1;
};

class ClusterStore {
 public:
  const std::vector<Cluster>& clusters() const { return clusters_; }
  const Cluster& cluster(ClusterId id) const { return clusters_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return clusters_.size(); }
  std::optional<Membership> membership(ObservationId obs) const;
  /// Observations rejected by assign(), with the reason.
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  friend struct ClusterStoreAccess;
  std::vector<Cluster> clusters_;
  std::vector<std::optional<Membership>> membership_;  // indexed by observation id
  std::vector<std::string> diagnostics_;
};

struct AssignResult {
  std::optional<ClusterId> cluster;  // empty when the observation was discarded
  int sign = 1;
  bool created = false;
};

/// Places one observation. Its vector v = p2 - p1 joins the cluster minimizing
/// d = min(|v - c|, |-v - c|) among those with d < tau * |c| (ties: lowest id) and the
/// center is updated to the new mean; otherwise a new cluster is founded with center v.
/// Zero-length vectors are discarded with a diagnostic.
AssignResult assign(ClusterStore& store, const SegmentObservation& obs, const EstimatedMap& map,
                    double tau = kDefaultClusterTau);

/// Resets every center to the exact mean of its members' current signed vectors.
void recompute_centers(ClusterStore& store, const EstimatedMap& map);

/// Mean of the signed member vectors, computed from scratch.
Vec3 batch_center(const Cluster& cluster, const EstimatedMap& map);

/// Clusters with at least `min_cardinality` members.
int count_clusters(const ClusterStore& store, int min_cardinality = 1);

/// Per cluster: id, center, cardinality and member observation ids with signs.
std::string clusters_to_json(const ClusterStore& store);

}  // namespace lsc
