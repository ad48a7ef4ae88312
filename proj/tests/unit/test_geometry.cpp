#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "lsc/geometry.hpp"
#include "oracles.hpp"

namespace lsc {
namespace {

constexpr double kPi = std::numbers::pi;

void expect_near(const Vec3& a, const Vec3& b, double tol) {
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), tol) << "a=" << a.transpose() << " b=" << b.transpose();
}

TEST(ApplySim3, IdentityLeavesPointUnchanged) {
  EXPECT_EQ(apply_sim3(Sim3::identity(), Vec3(1, 2, 3)), Vec3(1, 2, 3));
}

TEST(ApplySim3, PureScale) {
  const Sim3 t = Sim3::make(2.0, Rotation(), Vec3::Zero());
  EXPECT_EQ(apply_sim3(t, Vec3(1, 0, 0)), Vec3(2, 0, 0));
}

TEST(ApplySim3, ScaleRotationTranslationAgainstHomogeneousMatrix) {
  const Sim3 t = Sim3::make(2.0, Rotation::about_z(kPi / 2), Vec3(1, 1, 1));
  const Vec3 got = apply_sim3(t, Vec3(1, 0, 0));
  expect_near(got, Vec3(1, 3, 1), 1e-12);
  const Eigen::Matrix4d h = oracle::homogeneous(2.0, oracle::rodrigues(Vec3::UnitZ(), kPi / 2), Vec3(1, 1, 1));
  expect_near(got, oracle::apply_h(h, Vec3(1, 0, 0)), 1e-12);
}

TEST(ApplySim3, RandomTransformsMatchHomogeneousOracle) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const auto r = oracle::random_sim3(rng);
    const Vec3 p = oracle::random_vec(rng, 10.0);
    expect_near(apply_sim3(r.sim3(), p), oracle::apply_h(r.matrix(), p), 1e-10);
  }
}

TEST(ComposeSim3, IdentityIsNeutral) {
  std::mt19937_64 rng(3);
  const Sim3 b = oracle::random_sim3(rng).sim3();
  const Sim3 c = compose_sim3(Sim3::identity(), b);
  EXPECT_DOUBLE_EQ(c.scale, b.scale);
  expect_near(c.translation, b.translation, 0.0);
  EXPECT_LE(c.rotation.quaternion().angularDistance(b.rotation.quaternion()), 1e-15);
}

TEST(ComposeSim3, WithInverseIsIdentity) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) {
    const Sim3 a = oracle::random_sim3(rng).sim3();
    for (const Sim3& c : {compose_sim3(a, a.inverse()), compose_sim3(a.inverse(), a)}) {
      EXPECT_NEAR(c.scale, 1.0, 1e-9);
      EXPECT_LE(c.rotation.angle(), 1e-9);
      expect_near(c.translation, Vec3::Zero(), 1e-9);
    }
  }
}

TEST(ComposeSim3, ComposedApplyEqualsNestedApply) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    const Sim3 a = oracle::random_sim3(rng).sim3();
    const Sim3 b = oracle::random_sim3(rng).sim3();
    const Vec3 p = oracle::random_vec(rng);
    expect_near(apply_sim3(compose_sim3(a, b), p), apply_sim3(a, apply_sim3(b, p)), 1e-12);
  }
}

TEST(ComposeSim3, IsAssociative) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 200; ++i) {
    const Sim3 a = oracle::random_sim3(rng).sim3();
    const Sim3 b = oracle::random_sim3(rng).sim3();
    const Sim3 c = oracle::random_sim3(rng).sim3();
    const Sim3 l = (a * b) * c;
    const Sim3 r = a * (b * c);
    EXPECT_NEAR(l.scale, r.scale, 1e-12);
    EXPECT_LE((l.matrix() - r.matrix()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Sim3, MatrixMatchesHomogeneousOracle) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const auto r = oracle::random_sim3(rng);
    EXPECT_LE((r.sim3().matrix() - r.matrix()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Sim3, RejectsNonPositiveScale) {
  EXPECT_THROW(Sim3::make(0.0, Rotation(), Vec3::Zero()), std::invalid_argument);
  EXPECT_THROW(Sim3::make(-1.0, Rotation(), Vec3::Zero()), std::invalid_argument);
  EXPECT_THROW(Sim3::make(NAN, Rotation(), Vec3::Zero()), std::invalid_argument);
}

TEST(SegmentVector, Examples) {
  EXPECT_EQ(segment_vector(Vec3(0, 0, 0), Vec3(0, 0, 2)), Vec3(0, 0, 2));
  EXPECT_EQ(segment_vector(Vec3(1, 1, 1), Vec3(1, 1, 1)), Vec3::Zero());
  EXPECT_EQ(segment_vector(Vec3(1, 1, 1), Vec3(2, 3, 4)), Vec3(1, 2, 3));
}

TEST(SegmentVector, TranslationIsEliminated) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 1000; ++i) {
    const auto r = oracle::random_sim3(rng);
    const Sim3 t = r.sim3();
    const Vec3 p = oracle::random_vec(rng, 5), q = oracle::random_vec(rng, 5);
    const Vec3 lhs = segment_vector(apply_sim3(t, p), apply_sim3(t, q));
    const Vec3 rhs = r.s * (oracle::rodrigues(r.axis, r.angle) * segment_vector(p, q));
    expect_near(lhs, rhs, 1e-10);
  }
}

TEST(SegmentVector, NormScalesWithScaleOnly) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 1000; ++i) {
    const auto r = oracle::random_sim3(rng);
    const Vec3 v = oracle::random_vec(rng, 3);
    const Vec3 w = r.s * (r.sim3().rotation * v);
    EXPECT_NEAR(w.norm(), r.s * v.norm(), 1e-12);
  }
}

TEST(Sim3, UnitScaleIsRigidAction) {
  std::mt19937_64 rng(10);
  for (int i = 0; i < 100; ++i) {
    auto r = oracle::random_sim3(rng);
    r.s = 1.0;
    const Pose pose{r.sim3().rotation, r.t};
    const Vec3 p = oracle::random_vec(rng, 5);
    expect_near(apply_sim3(r.sim3(), p), pose.apply(p), 0.0);
  }
}

TEST(Rotation, StaysOrthonormalAfterLongChains) {
  std::mt19937_64 rng(12);
  Rotation r;
  for (int i = 0; i < 100000; ++i) {
    r = r * Rotation::from_axis_angle(oracle::random_vec(rng), 0.01);
  }
  const Mat3 m = r.matrix();
  EXPECT_LE((m * m.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR(m.determinant(), 1.0, 1e-9);
}

TEST(Rotation, FromMatrixValidates) {
  EXPECT_NO_THROW(Rotation::from_matrix(oracle::rodrigues(Vec3(1, 2, 3), 0.4)));
  EXPECT_THROW(Rotation::from_matrix(2.0 * Mat3::Identity()), std::invalid_argument);
  Mat3 reflect = Mat3::Identity();
  reflect(2, 2) = -1;
  EXPECT_THROW(Rotation::from_matrix(reflect), std::invalid_argument);
}

TEST(Rotation, FromQuaternionRejectsZero) {
  EXPECT_THROW(Rotation::from_quaternion(Eigen::Quaterniond(0, 0, 0, 0)), std::invalid_argument);
  const Rotation r = Rotation::from_quaternion(Eigen::Quaterniond(2, 0, 0, 0));
  EXPECT_DOUBLE_EQ(r.quaternion().w(), 1.0);
}

TEST(Rotation, MatchesRodrigues) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 200; ++i) {
    const auto r = oracle::random_sim3(rng);
    const Mat3 m = Rotation::from_axis_angle(r.axis, r.angle).matrix();
    EXPECT_LE((m - oracle::rodrigues(r.axis, r.angle)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Pose, InverseComposesToIdentity) {
  std::mt19937_64 rng(14);
  const auto r = oracle::random_sim3(rng);
  const Pose p{r.sim3().rotation, r.t};
  const Pose id = p * p.inverse();
  EXPECT_LE(id.rotation.angle(), 1e-12);
  expect_near(id.translation, Vec3::Zero(), 1e-12);
}

TEST(Interpolate, EndpointsAndMidScale) {
  const Sim3 a = Sim3::make(1.0, Rotation(), Vec3::Zero());
  const Sim3 b = Sim3::make(4.0, Rotation::about_z(1.0), Vec3(2, 0, 0));
  EXPECT_NEAR(interpolate(a, b, 0.0).scale, 1.0, 1e-15);
  EXPECT_NEAR(interpolate(a, b, 1.0).scale, 4.0, 1e-12);
  const Sim3 mid = interpolate(a, b, 0.5);
  EXPECT_NEAR(mid.scale, 2.0, 1e-12);
  EXPECT_NEAR(mid.rotation.angle(), 0.5, 1e-12);
  expect_near(mid.translation, Vec3(1, 0, 0), 1e-12);
}

TEST(ApplySim3, ActsOnPosesPositionAsPoint) {
  std::mt19937_64 rng(15);
  const Sim3 t = oracle::random_sim3(rng).sim3();
  const Pose p{Rotation::about_z(0.3), Vec3(1, 2, 3)};
  const Pose q = apply_sim3(t, p);
  expect_near(q.translation, apply_sim3(t, p.translation), 1e-12);
  const Mat3 expected = t.rotation.matrix() * p.rotation.matrix();
  EXPECT_LE((q.rotation.matrix() - expected).cwiseAbs().maxCoeff(), 1e-12);
}

}  // namespace
}  // namespace lsc
