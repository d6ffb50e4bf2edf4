#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "hopose/errors.hpp"
#include "hopose/geometry.hpp"
#include "support/oracles.hpp"

using namespace hopose;

namespace {

DepthMap random_depth(std::mt19937_64& rng, int w, int h, double invalid_fraction = 0.2) {
  std::uniform_real_distribution<double> d(0.5, 5.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> depth(static_cast<std::size_t>(w) * h);
  for (double& v : depth) v = u(rng) < invalid_fraction ? 0.0 : d(rng);
  return DepthMap(w, h, depth);
}

CameraIntrinsics random_intrinsics(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<double> f(200.0, 800.0);
  std::uniform_real_distribution<double> c(0.0, 1.0);
  return CameraIntrinsics(f(rng), c(rng) * w, c(rng) * h);
}

RigidTransform random_transform(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  return RigidTransform(oracle::random_rotation(rng), Vec3(u(rng), u(rng), u(rng)));
}

}  // namespace

TEST(DepthMap, RejectsNegativeAndNonFinite) {
  EXPECT_THROW(DepthMap(2, 1, {1.0, -1.0}), ValidationError);
  EXPECT_THROW(DepthMap(2, 1, {1.0, NAN}), ValidationError);
  EXPECT_THROW(DepthMap(2, 2, {1.0, 1.0}), ShapeError);
  const DepthMap d(2, 1, {0.0, 2.0});
  EXPECT_FALSE(d.valid(0));
  EXPECT_TRUE(d.valid(1));
  EXPECT_EQ(d.valid_count(), 1u);
}

TEST(Pointmap, ValidatesPlanes) {
  std::vector<Vec3> pts(4, Vec3::Ones());
  EXPECT_THROW(Pointmap(2, 2, pts, {1.0, 1.0, 0.0, 1.0}), ValidationError);
  EXPECT_THROW(Pointmap(2, 2, pts, {1.0, 1.0, INFINITY, 1.0}), ValidationError);
  EXPECT_THROW(Pointmap(3, 2, pts), ShapeError);
  const Pointmap pm(2, 2, pts);
  EXPECT_EQ(pm.valid_count(), 4u);
  EXPECT_EQ(pm.confidence(3), 1.0);
  EXPECT_EQ(pm.frame_id(), kUnknownFrame);
}

TEST(Intrinsics, RejectsBadValues) {
  EXPECT_THROW(CameraIntrinsics(0.0, 1.0, 1.0), ValidationError);
  EXPECT_THROW(CameraIntrinsics(-3.0, 1.0, 1.0), ValidationError);
  EXPECT_THROW(CameraIntrinsics(100.0, NAN, 1.0), ValidationError);
  const CameraIntrinsics k(300.0, 10.0, 20.0);
  EXPECT_TRUE((k.matrix() * k.inverse_matrix()).isApprox(Mat3::Identity(), 1e-15));
}

TEST(PointmapFromDepth, IdentityIntrinsicsGivesPixelGrid) {
  const DepthMap d(4, 3, std::vector<double>(12, 1.0));
  const Pointmap pm = pointmap_from_depth(d, CameraIntrinsics(1.0, 0.0, 0.0));
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 4; ++i) {
      EXPECT_EQ(pm.point(i, j), Vec3(i, j, 1.0));
    }
  }
}

TEST(PointmapFromDepth, PrincipalRayIsOnAxis) {
  std::vector<double> depth(12, 0.0);
  depth[1 * 4 + 2] = 3.5;
  const Pointmap pm = pointmap_from_depth(DepthMap(4, 3, depth), CameraIntrinsics(250.0, 2.0, 1.0));
  EXPECT_NEAR(pm.point(2, 1).x(), 0.0, 1e-15);
  EXPECT_NEAR(pm.point(2, 1).y(), 0.0, 1e-15);
  EXPECT_EQ(pm.point(2, 1).z(), 3.5);
  EXPECT_EQ(pm.valid_count(), 1u);
}

TEST(PointmapFromDepth, MatchesScalarOracle) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const DepthMap d = random_depth(rng, 8, 6);
    const CameraIntrinsics k = random_intrinsics(rng, 8, 6);
    const Pointmap pm = pointmap_from_depth(d, k, 3);
    EXPECT_EQ(pm.frame_id(), 3);
    for (int j = 0; j < 6; ++j) {
      for (int i = 0; i < 8; ++i) {
        const std::size_t idx = d.index(i, j);
        ASSERT_EQ(pm.valid(idx), d.valid(idx));
        EXPECT_EQ(pm.confidence(idx), 1.0);
        if (!d.valid(idx)) continue;
        const Vec3 ref = oracle::backproject(k.focal(), k.cx(), k.cy(), i, j, d.depth(idx));
        EXPECT_LE((pm.point(idx) - ref).cwiseAbs().maxCoeff(), 1e-12);
      }
    }
  }
}

TEST(PointmapFromDepth, ProjectionRoundTrip) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const DepthMap d = random_depth(rng, 16, 12);
    const CameraIntrinsics k = random_intrinsics(rng, 16, 12);
    const Pointmap pm = pointmap_from_depth(d, k);
    for (int j = 0; j < 12; ++j) {
      for (int i = 0; i < 16; ++i) {
        const std::size_t idx = d.index(i, j);
        if (!d.valid(idx)) continue;
        EXPECT_EQ(pm.point(idx).z(), d.depth(idx));
        const Vec2 px = project(pm.point(idx), k);
        EXPECT_NEAR(px.x(), i, 1e-9);
        EXPECT_NEAR(px.y(), j, 1e-9);
      }
    }
  }
}

TEST(Project, BehindCameraThrows) {
  const CameraIntrinsics k(100.0, 5.0, 5.0);
  EXPECT_THROW(project(Vec3(0, 0, 0), k), BehindCameraError);
  EXPECT_THROW(project(Vec3(1, 0, -1), k), BehindCameraError);
  EXPECT_EQ(project(Vec3(0, 0, 2), k), Vec2(5.0, 5.0));
}

TEST(Project, MatchesMatrixProduct) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const CameraIntrinsics k = random_intrinsics(rng, 64, 48);
    const Vec3 x(u(rng), u(rng), 1.5 + u(rng));
    const Vec3 h = k.matrix() * x;
    const Vec2 px = project(x, k);
    EXPECT_NEAR(px.x(), h.x() / h.z(), 1e-10);
    EXPECT_NEAR(px.y(), h.y() / h.z(), 1e-10);
  }
}

TEST(RigidTransform, ValidatesRotation) {
  Mat3 bad = Mat3::Identity();
  bad(0, 0) = 1.001;
  EXPECT_THROW(RigidTransform(bad, Vec3::Zero()), ValidationError);
  EXPECT_THROW(RigidTransform(-Mat3::Identity(), Vec3::Zero()), ValidationError);
  EXPECT_THROW(RigidTransform(Mat3::Identity(), Vec3(NAN, 0, 0)), ValidationError);
  const RigidTransform t = RigidTransform::nearest(bad, Vec3::Zero());
  EXPECT_TRUE(is_rotation(t.rotation()));
}

TEST(RigidTransform, MatrixRoundTripAndCenter) {
  std::mt19937_64 rng(4);
  const RigidTransform t = random_transform(rng);
  const RigidTransform back = RigidTransform::from_matrix(t.matrix());
  EXPECT_EQ(back.rotation(), t.rotation());
  EXPECT_EQ(back.translation(), t.translation());
  EXPECT_LE(t.apply(t.center()).norm(), 1e-14);
}

TEST(RigidTransform, RenormalizationIsIdempotent) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const RigidTransform t = random_transform(rng);
    const RigidTransform r = t.renormalized();
    EXPECT_LE((r.rotation() - t.rotation()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(r.translation(), t.translation());
  }
}

TEST(Compose, GroupLaws) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const RigidTransform a = random_transform(rng);
    const RigidTransform b = random_transform(rng);
    const RigidTransform c = random_transform(rng);
    const RigidTransform e = compose(a, inverse(a));
    EXPECT_LE((e.rotation() - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE(e.translation().norm(), 1e-12);
    const RigidTransform ib = compose(RigidTransform::identity(), b);
    EXPECT_LE((ib.matrix() - b.matrix()).cwiseAbs().maxCoeff(), 1e-12);
    const Mat4 left = compose(compose(a, b), c).matrix();
    const Mat4 right = compose(a, compose(b, c)).matrix();
    EXPECT_LE((left - right).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((left - a.matrix() * b.matrix() * c.matrix()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ChangeFrame, IdenticalPosesCopyExactly) {
  std::mt19937_64 rng(7);
  const DepthMap d = random_depth(rng, 8, 6);
  const Pointmap pm = pointmap_from_depth(d, random_intrinsics(rng, 8, 6), 0);
  const RigidTransform p = random_transform(rng);
  const Pointmap out = change_frame(pm, p, p, 0);
  for (std::size_t k = 0; k < pm.size(); ++k) EXPECT_EQ(out.point(k), pm.point(k));
}

TEST(ChangeFrame, PureTranslationShifts) {
  std::vector<Vec3> pts = {Vec3(1, 2, 3), Vec3(-1, 0, 4)};
  const Pointmap pm(2, 1, pts, {}, {}, 0);
  const Vec3 t0(0.5, -1.0, 2.0);
  const Pointmap out = change_frame(pm, RigidTransform(), RigidTransform(Mat3::Identity(), t0), 1);
  EXPECT_EQ(out.frame_id(), 1);
  EXPECT_EQ(out.point(0), pts[0] + t0);
  EXPECT_EQ(out.point(1), pts[1] + t0);
}

TEST(ChangeFrame, MatchesHomogeneousProduct) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vec3> pts(10);
    for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng));
    std::vector<std::uint8_t> mask = {1, 1, 0, 1, 1, 1, 1, 0, 1, 1};
    const Pointmap pm(10, 1, pts, {}, mask, 0);
    const RigidTransform src = random_transform(rng);
    const RigidTransform dst = random_transform(rng);
    const Pointmap out = change_frame(pm, src, dst, 1);
    const Mat4 m = dst.matrix() * src.matrix().inverse();
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (!mask[k]) {
        EXPECT_EQ(out.point(k), pts[k]);
        continue;
      }
      const Vec3 ref = (m * pts[k].homogeneous()).hnormalized();
      EXPECT_LE((out.point(k) - ref).norm(), 1e-12);
    }
  }
}

TEST(ChangeFrame, CompositionProperty) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const Pointmap pm = pointmap_from_depth(random_depth(rng, 8, 6), random_intrinsics(rng, 8, 6));
    const RigidTransform p1 = random_transform(rng);
    const RigidTransform p2 = random_transform(rng);
    const RigidTransform p3 = random_transform(rng);
    const Pointmap two_step = change_frame(change_frame(pm, p1, p2), p2, p3);
    const Pointmap direct = change_frame(pm, p1, p3);
    for (std::size_t k = 0; k < pm.size(); ++k) {
      if (pm.valid(k)) EXPECT_LE((two_step.point(k) - direct.point(k)).norm(), 1e-10);
    }
  }
}

TEST(Geodesic, KnownAngles) {
  std::mt19937_64 rng(10);
  const Mat3 ra = oracle::random_rotation(rng);
  EXPECT_EQ(geodesic_deg(ra, ra), 0.0);
  EXPECT_NEAR(geodesic_deg(ra, ra * oracle::axis_angle(Vec3::UnitZ(), 30.0)), 30.0, 1e-9);
  EXPECT_NEAR(geodesic_deg(Mat3::Identity(), oracle::axis_angle(Vec3::UnitX(), 180.0)), 180.0,
              1e-9);
}

TEST(Geodesic, ResolvesTinyAngles) {
  for (double deg : {1e-6, 1e-8, 1e-10}) {
    const Mat3 r = oracle::axis_angle(Vec3(1, 2, 3), deg);
    EXPECT_NEAR(geodesic_deg(Mat3::Identity(), r), deg, deg * 1e-6);
  }
}

TEST(Geodesic, MatchesLogMapAndIsBiInvariant) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Mat3 a = oracle::random_rotation(rng);
    const Mat3 b = oracle::random_rotation(rng);
    const Mat3 q = oracle::random_rotation(rng);
    const double angle = Eigen::AngleAxisd(a.transpose() * b).angle() * 180.0 / M_PI;
    const double g = geodesic_deg(a, b);
    EXPECT_NEAR(g, angle, 1e-9);
    EXPECT_NEAR(g, geodesic_deg(b, a), 1e-12);
    EXPECT_NEAR(g, geodesic_deg(q * a, q * b), 1e-9);
    EXPECT_NEAR(g, geodesic_deg(a * q, b * q), 1e-9);
  }
}

TEST(RotationExpLog, RoundTrip) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const Mat3 r = oracle::random_rotation(rng);
    EXPECT_LE((rotation_exp(rotation_log(r)) - r).cwiseAbs().maxCoeff(), 1e-10);
  }
  EXPECT_EQ(rotation_log(Mat3::Identity()), Vec3::Zero());
}
