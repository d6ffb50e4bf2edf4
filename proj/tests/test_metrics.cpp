#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hopose/errors.hpp"
#include "hopose/metrics.hpp"
#include "support/oracles.hpp"

using namespace hopose;

namespace {

// Replaces the rotation of frame k, keeping its camera center.
void set_rotation(GlobalPoses& p, std::size_t k, const Mat3& r) {
  const Vec3 c = p.poses[k].center();
  p.poses[k] = RigidTransform(r, -(r * c));
}

void set_center(GlobalPoses& p, std::size_t k, const Vec3& c) {
  const Mat3 r = p.poses[k].rotation();
  p.poses[k] = RigidTransform(r, -(r * c));
}

}  // namespace

TEST(Evaluate, IdenticalIsPerfect) {
  std::mt19937_64 rng(1);
  const GlobalPoses gt = oracle::random_trajectory(rng, 12);
  const SequenceReport r = evaluate(gt, gt);
  EXPECT_EQ(r.rot_error_deg, 0.0);
  EXPECT_EQ(r.trans_error, 0.0);
  EXPECT_EQ(r.det_rate_pct, 100.0);
  EXPECT_EQ(r.acc_15_15_pct, 100.0);
  EXPECT_EQ(r.acc_30_30_pct, 100.0);
  EXPECT_EQ(r.n_frames, 12u);
  EXPECT_FALSE(r.partial);
  const SequenceReport aligned = evaluate_sequence(gt, gt);
  EXPECT_LE(aligned.rot_error_deg, 1e-9);
  EXPECT_LE(aligned.trans_error, 1e-18);
}

TEST(Evaluate, HalfUnrecovered) {
  std::mt19937_64 rng(2);
  const GlobalPoses gt = oracle::random_trajectory(rng, 10);
  GlobalPoses est = gt;
  for (std::size_t k = 0; k < 10; k += 2) {
    est.recovered[k] = 0;
    est.poses[k] = RigidTransform();
  }
  const SequenceReport r = evaluate(est, gt);
  EXPECT_EQ(r.det_rate_pct, 50.0);
  EXPECT_EQ(r.acc_15_15_pct, 50.0);
  EXPECT_EQ(r.acc_30_30_pct, 50.0);
  EXPECT_EQ(r.rot_error_deg, 0.0);
  EXPECT_EQ(r.trans_error, 0.0);
  EXPECT_EQ(r.n_recovered, 5u);
  EXPECT_TRUE(r.partial);
}

TEST(Evaluate, TenDegreesOnOneFrame) {
  std::mt19937_64 rng(3);
  const GlobalPoses gt = oracle::random_trajectory(rng, 10);
  GlobalPoses est = gt;
  set_rotation(est, 4, gt.poses[4].rotation() * oracle::axis_angle(Vec3(1, 2, 3), 10.0));
  const SequenceReport r = evaluate(est, gt);
  EXPECT_NEAR(r.rot_error_deg, 1.0, 1e-12);
  EXPECT_EQ(r.acc_15_15_pct, 100.0);
  EXPECT_EQ(r.acc_30_30_pct, 100.0);
}

TEST(Evaluate, ThresholdsUseDistanceAndAngle) {
  std::mt19937_64 rng(4);
  const GlobalPoses gt = oracle::random_trajectory(rng, 4);
  GlobalPoses est = gt;
  // Frame 0: 0.2 units off (fails tight only). Frame 1: 20 degrees off
  // (fails tight only). Frame 2: 0.4 units off (fails both).
  set_center(est, 0, gt.poses[0].center() + Vec3(0.2, 0, 0));
  set_rotation(est, 1, gt.poses[1].rotation() * oracle::axis_angle(Vec3(0, 0, 1), 20.0));
  set_center(est, 2, gt.poses[2].center() + Vec3(0, 0.4, 0));
  const SequenceReport r = evaluate(est, gt);
  EXPECT_EQ(r.acc_15_15_pct, 25.0);
  EXPECT_EQ(r.acc_30_30_pct, 75.0);
  EXPECT_NEAR(r.trans_error, (0.04 + 0.16) / 4.0, 1e-12);
  EXPECT_NEAR(r.trans_rmse, std::sqrt(0.05), 1e-12);
  EXPECT_NEAR(r.rot_error_deg, 5.0, 1e-10);
}

TEST(Evaluate, ShapeErrors) {
  std::mt19937_64 rng(5);
  const GlobalPoses a = oracle::random_trajectory(rng, 3);
  const GlobalPoses b = oracle::random_trajectory(rng, 4);
  EXPECT_THROW(evaluate(a, b), ShapeError);
  EXPECT_THROW(evaluate(GlobalPoses{}, GlobalPoses{}), ShapeError);
  EXPECT_THROW(evaluate_sequence(a, b), ShapeError);
}

TEST(Alignment, RemovesRigidGauge) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const GlobalPoses gt = oracle::random_trajectory(rng, 8);
    const Mat3 q = oracle::random_rotation(rng);
    const GlobalPoses est = oracle::transform_world(gt, q, Vec3(3, -1, 2));
    const SequenceReport r = evaluate_sequence(est, gt);
    EXPECT_LE(r.rot_error_deg, 1e-9);
    EXPECT_LE(r.trans_rmse, 1e-9);
    EXPECT_EQ(r.acc_15_15_pct, 100.0);
  }
}

TEST(Alignment, GlobalNinetyDegreeRotation) {
  std::mt19937_64 rng(7);
  const GlobalPoses gt = oracle::random_trajectory(rng, 10);
  GlobalPoses est = gt;
  set_rotation(est, 2, gt.poses[2].rotation() * oracle::axis_angle(Vec3(0, 1, 0), 10.0));
  const GlobalPoses turned =
      oracle::transform_world(est, oracle::axis_angle(Vec3(0, 0, 1), 90.0), Vec3::Zero());
  const SequenceReport a = evaluate_sequence(est, gt);
  const SequenceReport b = evaluate_sequence(turned, gt);
  EXPECT_NEAR(a.rot_error_deg, b.rot_error_deg, 1e-9);
  EXPECT_NEAR(a.trans_error, b.trans_error, 1e-9);
  EXPECT_EQ(a.acc_15_15_pct, b.acc_15_15_pct);
}

TEST(Alignment, SimilarityRecoversScale) {
  std::mt19937_64 rng(8);
  const GlobalPoses gt = oracle::random_trajectory(rng, 6);
  const Mat3 q = oracle::random_rotation(rng);
  // est lives in a world where gt is scaled by 2: x_est = 2 Q x_gt + tau.
  const GlobalPoses est = oracle::transform_world(gt, q, Vec3(1, 1, 1), 2.0);
  const GaugeAlignment a = estimate_alignment(est, gt, AlignmentMode::kSimilarity);
  EXPECT_NEAR(a.scale, 0.5, 1e-9);
  const GaugeAlignment back = estimate_alignment(gt, est, AlignmentMode::kSimilarity);
  EXPECT_NEAR(back.scale, 2.0, 1e-9);
  const SequenceReport r = evaluate_sequence(est, gt, AlignmentMode::kSimilarity);
  EXPECT_LE(r.trans_rmse, 1e-9);
  EXPECT_LE(r.rot_error_deg, 1e-9);
}

TEST(Alignment, InvariantToCommonMotion) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const GlobalPoses gt = oracle::random_trajectory(rng, 9);
    GlobalPoses est = oracle::transform_world(gt, oracle::random_rotation_by(rng, 3.0),
                                              Vec3(0.05, 0, 0));
    std::normal_distribution<double> n(0.0, 0.05);
    for (std::size_t k = 0; k < est.size(); ++k) {
      set_center(est, k, est.poses[k].center() + Vec3(n(rng), n(rng), n(rng)));
      set_rotation(est, k, est.poses[k].rotation() * oracle::random_rotation_by(rng, 4.0));
    }
    est.recovered[3] = 0;
    const Mat3 q = oracle::random_rotation(rng);
    const Vec3 tau(2, 5, -1);
    for (auto mode : {AlignmentMode::kRigid, AlignmentMode::kSimilarity}) {
      const SequenceReport a = evaluate_sequence(est, gt, mode);
      const SequenceReport b = evaluate_sequence(oracle::transform_world(est, q, tau),
                                                 oracle::transform_world(gt, q, tau), mode);
      EXPECT_NEAR(a.rot_error_deg, b.rot_error_deg, 1e-9);
      EXPECT_NEAR(a.trans_error, b.trans_error, 1e-9);
      EXPECT_EQ(a.acc_15_15_pct, b.acc_15_15_pct);
      EXPECT_EQ(a.acc_30_30_pct, b.acc_30_30_pct);
    }
  }
}

TEST(Alignment, CollinearCentersUseOrientations) {
  std::mt19937_64 rng(10);
  GlobalPoses gt;
  for (int k = 0; k < 5; ++k) {
    const Mat3 r = oracle::random_rotation(rng);
    gt.poses.emplace_back(r, -(r * Vec3(k, 0, 0)));
    gt.recovered.push_back(1);
  }
  const Mat3 q = oracle::random_rotation(rng);
  const GlobalPoses est = oracle::transform_world(gt, q, Vec3(0, 1, 0));
  const GaugeAlignment a = estimate_alignment(est, gt, AlignmentMode::kRigid);
  EXPECT_TRUE(a.from_orientations);
  const SequenceReport r = evaluate(apply_alignment(est, a), gt);
  EXPECT_LE(r.rot_error_deg, 1e-9);
  EXPECT_LE(r.trans_rmse, 1e-9);
}

TEST(Alignment, TooFewFramesDegradesToRotationOnly) {
  std::mt19937_64 rng(11);
  const GlobalPoses gt = oracle::random_trajectory(rng, 4);
  GlobalPoses est = oracle::transform_world(gt, oracle::random_rotation(rng), Vec3(1, 0, 0));
  est.recovered = {1, 0, 0, 0};
  EXPECT_THROW(estimate_alignment(est, gt, AlignmentMode::kRigid), AlignmentError);
  const SequenceReport r = evaluate_sequence(est, gt);
  EXPECT_TRUE(r.rotation_only);
  EXPECT_TRUE(std::isnan(r.trans_error));
  EXPECT_LE(r.rot_error_deg, 1e-9);
  EXPECT_EQ(r.det_rate_pct, 25.0);
  EXPECT_EQ(r.acc_15_15_pct, 25.0);

  est.recovered = {1, 1, 0, 0};
  EXPECT_NO_THROW(estimate_alignment(est, gt, AlignmentMode::kRigid));
  EXPECT_THROW(estimate_alignment(est, gt, AlignmentMode::kSimilarity), AlignmentError);
}

TEST(Evaluate, LooseAtLeastTightAndDetMonotone) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const GlobalPoses gt = oracle::random_trajectory(rng, 10);
    GlobalPoses est = gt;
    for (std::size_t k = 0; k < est.size(); ++k) {
      set_rotation(est, k, gt.poses[k].rotation() * oracle::random_rotation_by(rng, 45.0 * unit(rng)));
      set_center(est, k, gt.poses[k].center() + 0.4 * unit(rng) * Vec3::UnitX());
      est.recovered[k] = unit(rng) < 0.9;
    }
    SequenceReport r = evaluate(est, gt);
    EXPECT_GE(r.acc_30_30_pct, r.acc_15_15_pct);
    EXPECT_GE(r.det_rate_pct, r.acc_30_30_pct);
    double prev = r.det_rate_pct;
    for (std::size_t k = 0; k < est.size(); ++k) {
      if (!est.recovered[k]) continue;
      est.recovered[k] = 0;
      r = evaluate(est, gt);
      EXPECT_LT(r.det_rate_pct, prev);
      prev = r.det_rate_pct;
    }
  }
}

TEST(Subsample, NineHundredToSixty) {
  const FrameSelection s = subsample_frames(900, 60);
  ASSERT_EQ(s.indices.size(), 60u);
  for (int k = 0; k < 60; ++k) EXPECT_EQ(s.indices[k], 15 * k);
  EXPECT_EQ(s.indices.back(), 885);
  EXPECT_FALSE(s.clamped);
}

TEST(Subsample, AllFramesAndPartition) {
  const FrameSelection all = subsample_frames(10, 10);
  for (int k = 0; k < 10; ++k) EXPECT_EQ(all.indices[k], k);
  EXPECT_EQ(subsample_frames(100, 7).indices, oracle::partition_subsample(100, 7));
  for (int n = 1; n < 60; ++n) {
    for (int keep = 1; keep <= n; ++keep) {
      EXPECT_EQ(subsample_frames(n, keep).indices, oracle::partition_subsample(n, keep));
    }
  }
}

TEST(Subsample, ClampsAndValidates) {
  const FrameSelection s = subsample_frames(5, 9);
  EXPECT_TRUE(s.clamped);
  EXPECT_EQ(s.indices, (std::vector<int>{0, 1, 2, 3, 4}));
  EXPECT_THROW(subsample_frames(0, 1), ValidationError);
  EXPECT_THROW(subsample_frames(5, 0), ValidationError);
}
