#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hopose/geometry.hpp"

namespace hopose {

enum class ObjectShape { kSphereCluster, kBoxCluster, kBlob };
enum class Trajectory { kOrbit, kRandomHemisphere };

std::string to_string(ObjectShape shape);
std::string to_string(Trajectory trajectory);
ObjectShape parse_object_shape(const std::string& s);
Trajectory parse_trajectory(const std::string& s);

/// Procedural multi-view scene. All randomness derives from `rng_seed`.
struct SceneSpec {
  /// Size of the shared ground-truth surface sample cloud.
  int n_points = 2000;
  ObjectShape object_shape = ObjectShape::kSphereCluster;
  /// Approximate object diameter, in scene units.
  double scene_scale = 1.0;
  int n_views = 8;
  Trajectory trajectory = Trajectory::kOrbit;
  /// One focal length per sequence, drawn uniformly from this range.
  double focal_min = 100.0;
  double focal_max = 140.0;
  int width = 128;
  int height = 96;
  /// Std of additive depth noise, as a fraction of scene_scale.
  double depth_noise_sigma = 0.0;
  /// Default fraction of corrupted pixels in generated pointmap pairs.
  double outlier_fraction = 0.0;
  /// Fraction of each view's covered pixels hidden by one occluding disk.
  double occlusion_fraction = 0.0;
  std::uint64_t rng_seed = 0;

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

/// Solid primitive: an ellipsoid or an oriented box.
struct Primitive {
  enum class Kind { kEllipsoid, kBox };
  Kind kind = Kind::kEllipsoid;
  Vec3 center = Vec3::Zero();
  Mat3 orientation = Mat3::Identity();  // local-to-world
  Vec3 half_extents = Vec3::Ones();     // radii for ellipsoids

  /// Smallest s > 0 with origin + s * dir on the surface, if any.
  std::optional<double> intersect(const Vec3& origin, const Vec3& dir) const;
  bool contains(const Vec3& x) const;
};

struct SceneView {
  DepthMap depth;
  CameraIntrinsics intrinsics;
  /// World-to-camera.
  RigidTransform pose;
};

struct SceneBundle {
  SceneSpec spec;
  std::vector<Primitive> primitives;
  std::vector<SceneView> views;
  /// Surface samples in world coordinates, each visible in >= 2 views.
  std::vector<Vec3> points;
  /// Fraction of the retained samples visible in at least two views.
  double coverage = 0.0;

  /// First surface hit along the ray through continuous pixel (u, v) of
  /// `view`, in that camera's frame. Ignores occlusion masks.
  std::optional<Vec3> cast_ray(int view, double u, double v) const;
  /// Whether world point `x` is the first surface hit seen by `view` at an
  /// unoccluded in-image pixel.
  bool sees(int view, const Vec3& x) const;
  /// Diagonal of the bounding box of `points`.
  double diameter() const;
};

SceneBundle generate(const SceneSpec& spec);

/// Ground-truth world-to-camera transform of view j relative to view i.
RigidTransform relative_truth(const SceneBundle& bundle, int i, int j);

struct PairKnobs {
  /// Isotropic 3D noise std added to every valid point, fraction of scene_scale.
  double point_noise_sigma = 0.0;
  double outlier_fraction = 0.0;
  /// Corrupted points land at least this far from their own pixel.
  double min_outlier_px = 20.0;
  std::uint64_t seed = 0;

  static PairKnobs from_spec(const SceneSpec& spec);
};

/// Simulated network output for a view pair.
struct PointmapPair {
  Pointmap x11;  // view i in its own frame
  Pointmap x21;  // view j in view i's frame
  std::vector<std::uint8_t> corrupted1;
  std::vector<std::uint8_t> corrupted2;
};

inline constexpr double kCleanRawConfidence = 3.0;
inline constexpr double kCorruptedRawConfidence = -3.0;

PointmapPair make_pair_pointmaps(const SceneBundle& bundle, int i, int j,
                                 const PairKnobs& knobs);

/// splitmix64 finalizer, used to derive independent per-stream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace hopose
