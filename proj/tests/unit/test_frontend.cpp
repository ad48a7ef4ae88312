#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "lsc/frontend.hpp"
#include "lsc/world.hpp"
#include "oracles.hpp"

namespace lsc {
namespace {

World corridor(std::uint64_t seed = 1) {
  WorldSpec spec;
  spec.rng_seed = seed;
  return generate_corridor(spec);
}

TEST(StepDrift, ZeroSigmasStayIdentity) {
  DriftState d = DriftState::start(DriftConfig{0, 0, 0, 5});
  for (int i = 0; i < 500; ++i) d = step_drift(std::move(d));
  EXPECT_EQ(d.cumulative.scale, 1.0);
  EXPECT_EQ(d.cumulative.translation, Vec3::Zero());
  EXPECT_EQ(d.cumulative.rotation.angle(), 0.0);
}

TEST(StepDrift, PureScaleKeepsRotationAndTranslationExact) {
  DriftState d = DriftState::start(DriftConfig{1e-3, 0, 0, 5});
  for (int i = 0; i < 500; ++i) {
    d = step_drift(std::move(d));
    ASSERT_EQ(d.cumulative.translation, Vec3::Zero());
    ASSERT_EQ(d.cumulative.rotation.angle(), 0.0);
  }
  EXPECT_NE(d.cumulative.scale, 1.0);
}

TEST(StepDrift, LogScaleVarianceMatchesRandomWalk) {
  // 1000 steps of sigma 1e-3: stddev of log s is 1e-3 * sqrt(1000).
  const int n_seeds = 200, n_steps = 1000;
  std::vector<double> logs;
  for (int seed = 0; seed < n_seeds; ++seed) {
    DriftState d = DriftState::start(DriftConfig{1e-3, 0, 0, static_cast<std::uint64_t>(seed)});
    for (int i = 0; i < n_steps; ++i) d = step_drift(std::move(d));
    logs.push_back(std::log(d.cumulative.scale));
  }
  double mean = 0.0;
  for (double v : logs) mean += v;
  mean /= n_seeds;
  double var = 0.0;
  for (double v : logs) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / (n_seeds - 1));
  const double expected = 1e-3 * std::sqrt(static_cast<double>(n_steps));
  EXPECT_NEAR(sd, expected, 0.2 * expected);
}

TEST(StepDrift, DeterministicForSeed) {
  DriftState a = DriftState::start(DriftConfig{1e-3, 1e-3, 1e-3, 9});
  DriftState b = DriftState::start(DriftConfig{1e-3, 1e-3, 1e-3, 9});
  for (int i = 0; i < 100; ++i) {
    a = step_drift(std::move(a));
    b = step_drift(std::move(b));
  }
  EXPECT_EQ(a.cumulative.matrix(), b.cumulative.matrix());
}

TEST(StepDrift, RejectsNegativeSigma) {
  EXPECT_THROW(DriftState::start(DriftConfig{-1, 0, 0, 0}), std::invalid_argument);
}

TEST(Simulate, NoDriftNoNoiseReproducesTheWorld) {
  const World w = corridor();
  ObservationConfig obs;
  obs.detect_prob = 1.0;
  obs.endpoint_noise_sigma = 0.0;
  const EstimatedMap m = simulate(w, DriftConfig{}, obs);
  ASSERT_FALSE(m.points.empty());
  for (const auto& o : m.observations) {
    const WorldSegment& s = w.segments[static_cast<std::size_t>(o.world_segment_index)];
    EXPECT_EQ(m.point(o.endpoint_ids[0]).position, s.a);
    EXPECT_EQ(m.point(o.endpoint_ids[1]).position, s.b);
  }
  ASSERT_EQ(m.est_trajectory.size(), w.gt_trajectory.size());
  for (std::size_t i = 0; i < w.gt_trajectory.size(); ++i) {
    EXPECT_EQ(m.est_trajectory[i].pose.translation, w.gt_trajectory[i].pose.translation);
  }
}

TEST(Simulate, PureScaleDriftScalesNewPointsAboutOrigin) {
  const World w = corridor();
  ObservationConfig obs;
  obs.detect_prob = 1.0;
  obs.endpoint_noise_sigma = 0.0;
  FrontEnd fe(w, DriftConfig{2e-3, 0, 0, 4}, obs);
  std::vector<double> scale_at_frame;
  while (!fe.done()) {
    fe.step();
    scale_at_frame.push_back(fe.drift().cumulative.scale);
  }
  const EstimatedMap& m = fe.map();
  for (const auto& o : m.observations) {
    const WorldSegment& s = w.segments[static_cast<std::size_t>(o.world_segment_index)];
    const Vec3 truth[2] = {s.a, s.b};
    for (int e = 0; e < 2; ++e) {
      const MapPoint& p = m.point(o.endpoint_ids[static_cast<std::size_t>(e)]);
      const double sk = scale_at_frame[static_cast<std::size_t>(p.first_seen_frame)];
      EXPECT_NEAR(p.position.norm(), sk * truth[e].norm(), 1e-12 * (1 + truth[e].norm()));
    }
  }
}

TEST(Simulate, EndpointsFirstSeenTogetherShareOneDrift) {
  const World w = corridor();
  ObservationConfig obs;
  obs.endpoint_noise_sigma = 0.0;
  FrontEnd fe(w, DriftConfig{1e-3, 1e-3, 1e-3, 21}, obs);
  std::vector<Sim3> drift_at_frame;
  while (!fe.done()) {
    fe.step();
    drift_at_frame.push_back(fe.drift().cumulative);
  }
  const EstimatedMap& m = fe.map();
  int checked = 0;
  for (const auto& o : m.observations) {
    const MapPoint& p1 = m.point(o.endpoint_ids[0]);
    const MapPoint& p2 = m.point(o.endpoint_ids[1]);
    if (p1.first_seen_frame != o.frame || p2.first_seen_frame != o.frame) continue;
    const Sim3& d = drift_at_frame[static_cast<std::size_t>(o.frame)];
    const WorldSegment& s = w.segments[static_cast<std::size_t>(o.world_segment_index)];
    const Vec3 expected = d.scale * (d.rotation.matrix() * s.vector());
    EXPECT_LE((m.segment_vector(o) - expected).norm(), 1e-12 * (1 + s.vector().norm()));
    ++checked;
  }
  EXPECT_GT(checked, 10);
}

TEST(Simulate, ReobservationsReuseMapPoints) {
  const World w = corridor();
  const EstimatedMap m = simulate(w, DriftConfig{1e-3, 0, 0, 2}, ObservationConfig{});
  EXPECT_GT(m.observations.size(), m.points.size());
  std::map<int, std::array<PointId, 2>> ids;
  for (const auto& o : m.observations) {
    auto [it, inserted] = ids.emplace(o.world_segment_index, o.endpoint_ids);
    if (!inserted) EXPECT_EQ(it->second, o.endpoint_ids);
  }
  EXPECT_NO_THROW(m.validate());
}

TEST(Simulate, RespectsRangeFacingAndMinimumLength) {
  const World w = corridor();
  ObservationConfig obs;
  obs.detect_prob = 1.0;
  obs.min_segment_length = 1.0;  // drops lintels (0.9 m) and short clutter
  const EstimatedMap m = simulate(w, DriftConfig{}, obs);
  for (const auto& o : m.observations) {
    const WorldSegment& s = w.segments[static_cast<std::size_t>(o.world_segment_index)];
    EXPECT_GE(s.vector().norm(), 1.0);
    const Pose& cam = w.gt_trajectory[static_cast<std::size_t>(o.frame)].pose;
    const Vec3 to_mid = 0.5 * (s.a + s.b) - cam.translation;
    EXPECT_LE(to_mid.norm(), obs.max_range);
    EXPECT_GT((cam.rotation * Vec3::UnitX()).dot(to_mid), 0.0);
  }
}

TEST(Simulate, DetectionProbabilityZeroSeesNothing) {
  ObservationConfig obs;
  obs.detect_prob = 0.0;
  const EstimatedMap m = simulate(corridor(), DriftConfig{}, obs);
  EXPECT_TRUE(m.observations.empty());
  EXPECT_TRUE(m.points.empty());
}

TEST(Simulate, NoiseHasConfiguredSpread) {
  const World w = corridor();
  ObservationConfig obs;
  obs.detect_prob = 1.0;
  obs.endpoint_noise_sigma = 0.02;
  const EstimatedMap m = simulate(w, DriftConfig{}, obs);
  double sq = 0.0;
  int n = 0;
  std::vector<bool> seen(m.points.size(), false);
  for (const auto& o : m.observations) {
    const WorldSegment& s = w.segments[static_cast<std::size_t>(o.world_segment_index)];
    const Vec3 truth[2] = {s.a, s.b};
    for (int e = 0; e < 2; ++e) {
      const PointId id = o.endpoint_ids[static_cast<std::size_t>(e)];
      if (seen[static_cast<std::size_t>(id)]) continue;
      seen[static_cast<std::size_t>(id)] = true;
      sq += (m.point(id).position - truth[e]).squaredNorm();
      n += 3;
    }
  }
  EXPECT_NEAR(std::sqrt(sq / n), 0.02, 0.005);
}

TEST(Simulate, RawTrajectoryIsGroundTruthUnderDrift) {
  const World w = corridor();
  FrontEnd fe(w, DriftConfig{1e-3, 0, 0, 3}, ObservationConfig{});
  while (!fe.done()) {
    fe.step();
    const std::size_t k = fe.raw_trajectory().size() - 1;
    const Vec3 expected = fe.drift().cumulative.apply(w.gt_trajectory[k].pose.translation);
    EXPECT_EQ(fe.raw_trajectory()[k].pose.translation, expected);
  }
  EXPECT_THROW(fe.step(), std::logic_error);
}

TEST(Simulate, CorrectionMovesNewPointsAndPoses) {
  const World w = corridor();
  ObservationConfig obs;
  obs.detect_prob = 1.0;
  obs.endpoint_noise_sigma = 0.0;
  FrontEnd fe(w, DriftConfig{}, obs);
  const Sim3 c = Sim3::make(2.0, Rotation(), Vec3::Zero());
  fe.step(c);
  const EstimatedMap& m = fe.map();
  ASSERT_FALSE(m.observations.empty());
  const WorldSegment& s = w.segments[static_cast<std::size_t>(m.observations[0].world_segment_index)];
  EXPECT_EQ(m.point(m.observations[0].endpoint_ids[0]).position, 2.0 * s.a);
  EXPECT_EQ(m.est_trajectory[0].pose.translation, 2.0 * w.gt_trajectory[0].pose.translation);
  EXPECT_EQ(fe.raw_trajectory()[0].pose.translation, w.gt_trajectory[0].pose.translation);
}

TEST(EstimatedMap, UnknownPointIdIsNamed) {
  EstimatedMap m;
  try {
    m.point(42);
    FAIL();
  } catch (const std::out_of_range& e) {
    EXPECT_NE(std::string(e.what()).find("42"), std::string::npos);
  }
}

TEST(ObservationConfig, Validation) {
  ObservationConfig o;
  o.detect_prob = 1.5;
  EXPECT_THROW(o.validate(), std::invalid_argument);
  o = ObservationConfig{};
  o.max_range = 0;
  EXPECT_THROW(o.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace lsc
