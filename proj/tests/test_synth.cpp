#include <cmath>
#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "hopose/errors.hpp"
#include "hopose/relative_pose.hpp"
#include "hopose/synth.hpp"

using namespace hopose;

namespace {

SceneSpec small_spec(std::uint64_t seed = 1) {
  SceneSpec s;
  s.n_points = 300;
  s.n_views = 4;
  s.width = 64;
  s.height = 48;
  s.rng_seed = seed;
  return s;
}

bool same_bundle(const SceneBundle& a, const SceneBundle& b) {
  if (a.views.size() != b.views.size() || a.points.size() != b.points.size()) return false;
  for (std::size_t v = 0; v < a.views.size(); ++v) {
    const auto da = a.views[v].depth.depths();
    const auto db = b.views[v].depth.depths();
    if (da.size() != db.size() ||
        std::memcmp(da.data(), db.data(), da.size() * sizeof(double)) != 0) {
      return false;
    }
    if (a.views[v].pose.matrix() != b.views[v].pose.matrix()) return false;
    if (a.views[v].intrinsics.focal() != b.views[v].intrinsics.focal()) return false;
  }
  for (std::size_t k = 0; k < a.points.size(); ++k) {
    if (a.points[k] != b.points[k]) return false;
  }
  return true;
}

}  // namespace

TEST(SceneSpec, Validation) {
  EXPECT_NO_THROW(small_spec().validate());
  auto expect_field = [](SceneSpec s, const std::string& field) {
    try {
      s.validate();
      ADD_FAILURE() << "expected failure for " << field;
    } catch (const ValidationError& e) {
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
  };
  SceneSpec s = small_spec();
  s.n_views = 1;
  expect_field(s, "n_views");
  s = small_spec();
  s.occlusion_fraction = 1.0;
  expect_field(s, "occlusion_fraction");
  s = small_spec();
  s.outlier_fraction = -0.1;
  expect_field(s, "outlier_fraction");
  s = small_spec();
  s.focal_min = 200.0;
  s.focal_max = 100.0;
  expect_field(s, "focal");
  s = small_spec();
  s.scene_scale = 0.0;
  expect_field(s, "scene_scale");
  EXPECT_THROW(generate(s), ValidationError);
}

TEST(SceneSpec, EnumNames) {
  for (auto shape : {ObjectShape::kSphereCluster, ObjectShape::kBoxCluster, ObjectShape::kBlob}) {
    EXPECT_EQ(parse_object_shape(to_string(shape)), shape);
  }
  for (auto t : {Trajectory::kOrbit, Trajectory::kRandomHemisphere}) {
    EXPECT_EQ(parse_trajectory(to_string(t)), t);
  }
  EXPECT_THROW(parse_object_shape("torus"), ValidationError);
  EXPECT_THROW(parse_trajectory("spiral"), ValidationError);
}

TEST(Generate, Deterministic) {
  const SceneSpec s = small_spec(5);
  EXPECT_TRUE(same_bundle(generate(s), generate(s)));
  EXPECT_FALSE(same_bundle(generate(s), generate(small_spec(6))));
}

TEST(Generate, CoverageAndFacing) {
  for (auto shape : {ObjectShape::kSphereCluster, ObjectShape::kBoxCluster, ObjectShape::kBlob}) {
    for (auto traj : {Trajectory::kOrbit, Trajectory::kRandomHemisphere}) {
      SceneSpec s = small_spec(9);
      s.object_shape = shape;
      s.trajectory = traj;
      const SceneBundle b = generate(s);
      EXPECT_EQ(b.coverage, 1.0);
      EXPECT_EQ(static_cast<int>(b.points.size()), s.n_points);
      const double f = b.views[0].intrinsics.focal();
      EXPECT_GE(f, s.focal_min);
      EXPECT_LE(f, s.focal_max);
      Vec3 centroid = Vec3::Zero();
      for (const auto& x : b.points) centroid += x;
      centroid /= static_cast<double>(b.points.size());
      for (const auto& view : b.views) {
        EXPECT_EQ(view.intrinsics.focal(), f);
        EXPECT_GT(view.depth.valid_count(), 0u);
        // The optical axis points at the object.
        const Vec3 c = view.pose.apply(centroid);
        EXPECT_GT(c.z(), 0.0);
        EXPECT_LT(std::hypot(c.x(), c.y()), 0.5 * c.z());
      }
    }
  }
}

TEST(Generate, CovisiblePixelsAgree) {
  for (int n_views : {2, 8}) {
    SceneSpec s = small_spec(3);
    s.n_views = n_views;
    const SceneBundle b = generate(s);
    // Two views sit 180 degrees apart; with eight, neighbors overlap widely.
    const int a = 0;
    const int o = 1;
    const Pointmap pm = pointmap_from_depth(b.views[a].depth, b.views[a].intrinsics);
    const Pointmap moved = change_frame(pm, b.views[a].pose, b.views[o].pose);
    std::size_t checked = 0;
    for (std::size_t k = 0; k < pm.size(); ++k) {
      if (!pm.valid(k)) continue;
      const Vec3 world = inverse(b.views[a].pose).apply(pm.point(k));
      if (!b.sees(o, world)) continue;
      const Vec2 uv = project(moved.point(k), b.views[o].intrinsics);
      const auto hit = b.cast_ray(o, uv.x(), uv.y());
      ASSERT_TRUE(hit.has_value());
      EXPECT_LE((*hit - moved.point(k)).norm(), 1e-9 * s.scene_scale);
      ++checked;
    }
    EXPECT_GT(checked, n_views == 2 ? 0u : 150u);
  }
}

TEST(Generate, DepthNoiseStatistics) {
  SceneSpec clean = small_spec(4);
  clean.width = 128;
  clean.height = 96;
  clean.n_views = 12;
  SceneSpec noisy = clean;
  noisy.depth_noise_sigma = 0.01;
  const SceneBundle a = generate(clean);
  const SceneBundle b = generate(noisy);
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (std::size_t v = 0; v < a.views.size(); ++v) {
    for (std::size_t k = 0; k < a.views[v].depth.size(); ++k) {
      if (!a.views[v].depth.valid(k)) continue;
      const double d = b.views[v].depth.depth(k) - a.views[v].depth.depth(k);
      sum += d;
      sq += d * d;
      ++n;
    }
  }
  ASSERT_GE(n, 10000u);
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  EXPECT_NEAR(sd, 0.01 * clean.scene_scale, 0.1 * 0.01 * clean.scene_scale);
}

TEST(Generate, OcclusionRemovesPixels) {
  SceneSpec clean = small_spec(8);
  SceneSpec occ = clean;
  occ.occlusion_fraction = 0.3;
  const SceneBundle a = generate(clean);
  const SceneBundle b = generate(occ);
  for (std::size_t v = 0; v < a.views.size(); ++v) {
    const double before = static_cast<double>(a.views[v].depth.valid_count());
    const double after = static_cast<double>(b.views[v].depth.valid_count());
    EXPECT_LT(after, before);
    EXPECT_GT(after, 0.2 * before);
    for (std::size_t k = 0; k < a.views[v].depth.size(); ++k) {
      if (b.views[v].depth.valid(k)) {
        EXPECT_EQ(b.views[v].depth.depth(k), a.views[v].depth.depth(k));
      }
    }
  }
}

TEST(PairPointmaps, NoiselessMatchesFrameChange) {
  const SceneBundle b = generate(small_spec(2));
  const PointmapPair p = make_pair_pointmaps(b, 0, 2, {});
  const Pointmap x11 = pointmap_from_depth(b.views[0].depth, b.views[0].intrinsics);
  const Pointmap x22 = pointmap_from_depth(b.views[2].depth, b.views[2].intrinsics);
  const Pointmap ref = change_frame(x22, b.views[2].pose, b.views[0].pose);
  for (std::size_t k = 0; k < x11.size(); ++k) {
    EXPECT_EQ(p.x11.valid(k), x11.valid(k));
    if (x11.valid(k)) EXPECT_LE((p.x11.point(k) - x11.point(k)).norm(), 1e-15);
    EXPECT_EQ(p.x21.valid(k), ref.valid(k));
    if (ref.valid(k)) EXPECT_LE((p.x21.point(k) - ref.point(k)).norm(), 1e-12);
  }
}

TEST(PairPointmaps, SameViewIsIdentical) {
  const SceneBundle b = generate(small_spec(2));
  PairKnobs knobs;
  knobs.outlier_fraction = 0.2;
  knobs.point_noise_sigma = 0.01;
  const PointmapPair p = make_pair_pointmaps(b, 1, 1, knobs);
  for (std::size_t k = 0; k < p.x11.size(); ++k) {
    if (p.x11.valid(k)) EXPECT_EQ(p.x11.point(k), p.x21.point(k));
  }
}

TEST(PairPointmaps, NoiselessPairRecoversTruth) {
  const SceneBundle b = generate(small_spec(11));
  const PointmapPair p = make_pair_pointmaps(b, 0, 1, {});
  const RelativePoseResult r = relative_pose(p.x11, p.x21, {});
  const RigidTransform gt = relative_truth(b, 0, 1);
  EXPECT_LE(geodesic_deg(r.transform.rotation(), gt.rotation()), 1e-4);
  EXPECT_NEAR(r.focal, b.views[0].intrinsics.focal(), 1e-6 * r.focal);
}

TEST(PairPointmaps, OutliersFarAndLowConfidence) {
  const SceneBundle b = generate(small_spec(12));
  PairKnobs knobs;
  knobs.outlier_fraction = 0.3;
  knobs.seed = 77;
  const PointmapPair p = make_pair_pointmaps(b, 0, 3, knobs);
  const RigidTransform rel = relative_truth(b, 0, 3);
  std::size_t bad = 0, valid = 0;
  double min_clean = INFINITY, max_bad = 0.0;
  for (std::size_t k = 0; k < p.x21.size(); ++k) {
    if (!p.x21.valid(k)) continue;
    ++valid;
    const Vec2 pix(static_cast<double>(k % p.x21.width()), static_cast<double>(k / p.x21.width()));
    if (p.corrupted2[k]) {
      ++bad;
      max_bad = std::max(max_bad, p.x21.confidence(k));
      const Vec3 xc = rel.apply(p.x21.point(k));
      if (xc.z() > 0.0) EXPECT_GE((project(xc, b.views[3].intrinsics) - pix).norm(), 20.0);
    } else {
      min_clean = std::min(min_clean, p.x21.confidence(k));
    }
  }
  EXPECT_EQ(bad, static_cast<std::size_t>(std::floor(0.3 * valid)));
  EXPECT_LT(max_bad, min_clean);
  // Same knobs, same pair: identical output.
  const PointmapPair again = make_pair_pointmaps(b, 0, 3, knobs);
  EXPECT_EQ(again.corrupted2, p.corrupted2);
  EXPECT_THROW(make_pair_pointmaps(b, 0, 9, knobs), ValidationError);
}

TEST(MixSeed, SpreadsStreams) {
  EXPECT_NE(mix_seed(0, 1), mix_seed(0, 2));
  EXPECT_NE(mix_seed(0, 1, 2), mix_seed(0, 2, 1));
  EXPECT_EQ(mix_seed(5, 3, 4), mix_seed(5, 3, 4));
}
