#include "hopose/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Geometry>

#include "hopose/errors.hpp"

namespace hopose {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Stream tags for seed derivation.
enum : std::uint64_t {
  kStreamShape = 1,
  kStreamCameras = 2,
  kStreamNoise = 3,
  kStreamOcclusion = 4,
  kStreamSamples = 5,
  kStreamPair = 6,
};

Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v(n(rng), n(rng), n(rng));
  return v.normalized();
}

std::vector<Primitive> make_primitives(const SceneSpec& spec, std::mt19937_64& rng) {
  const double s = spec.scene_scale;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Primitive> out;
  auto ellipsoid = [&](const Vec3& c, const Vec3& radii, const Mat3& rot) {
    out.push_back({Primitive::Kind::kEllipsoid, c, rot, radii});
  };
  auto box = [&](const Vec3& c, const Vec3& half, const Mat3& rot) {
    out.push_back({Primitive::Kind::kBox, c, rot, half});
  };
  switch (spec.object_shape) {
    case ObjectShape::kSphereCluster: {
      ellipsoid(Vec3::Zero(), Vec3::Constant(0.28 * s), Mat3::Identity());
      for (int k = 0; k < 5; ++k) {
        const double r = (0.05 + 0.08 * u(rng)) * s;
        ellipsoid(random_unit(rng) * (0.28 * s + 0.4 * r), Vec3::Constant(r), Mat3::Identity());
      }
      break;
    }
    case ObjectShape::kBoxCluster: {
      box(Vec3::Zero(), Vec3(0.22, 0.14, 0.18) * s, random_rotation(rng));
      // Thin elongated handle.
      box(random_unit(rng) * 0.1 * s, Vec3(0.34, 0.025, 0.025) * s, random_rotation(rng));
      for (int k = 0; k < 2; ++k) {
        box(random_unit(rng) * 0.2 * s, Vec3::Constant((0.05 + 0.05 * u(rng)) * s),
            random_rotation(rng));
      }
      break;
    }
    case ObjectShape::kBlob: {
      for (int k = 0; k < 5; ++k) {
        const Vec3 radii(0.1 + 0.15 * u(rng), 0.1 + 0.15 * u(rng), 0.08 + 0.1 * u(rng));
        ellipsoid(k == 0 ? Vec3::Zero() : Vec3(random_unit(rng) * 0.15 * s), radii * s,
                  random_rotation(rng));
      }
      break;
    }
  }
  return out;
}

// World-to-camera pose of a camera at `center` looking at the origin, with
// image rows pointing along -up.
RigidTransform look_at(const Vec3& center, Vec3 up) {
  const Vec3 forward = (-center).normalized();
  if (std::abs(forward.dot(up.normalized())) > 0.99) up = Vec3::UnitX();
  const Vec3 right = forward.cross(up).normalized();
  const Vec3 down = forward.cross(right);
  Mat3 c2w;
  c2w.col(0) = right;
  c2w.col(1) = down;
  c2w.col(2) = forward;
  const Mat3 r = nearest_rotation(c2w.transpose());
  return RigidTransform(r, -(r * center));
}

double bounding_radius(const std::vector<Primitive>& prims) {
  double r = 0.0;
  for (const auto& p : prims) r = std::max(r, p.center.norm() + p.half_extents.norm());
  return r;
}

double first_hit(const std::vector<Primitive>& prims, const Vec3& origin, const Vec3& dir) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : prims) {
    if (auto s = p.intersect(origin, dir)) best = std::min(best, *s);
  }
  return best;
}

Vec3 sample_surface(const Primitive& p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec3 local;
  if (p.kind == Primitive::Kind::kEllipsoid) {
    local = random_unit(rng).cwiseProduct(p.half_extents);
  } else {
    const Vec3& h = p.half_extents;
    const double areas[3] = {h.y() * h.z(), h.x() * h.z(), h.x() * h.y()};
    std::discrete_distribution<int> face({areas[0], areas[0], areas[1], areas[1], areas[2],
                                          areas[2]});
    const int f = face(rng);
    const int axis = f / 2;
    local = Vec3(u(rng) * h.x(), u(rng) * h.y(), u(rng) * h.z());
    local[axis] = (f % 2 ? -1.0 : 1.0) * h[axis];
  }
  return p.center + p.orientation * local;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = seed ^ (a * 0x9E3779B97F4A7C15ULL) ^ (b * 0xC2B2AE3D27D4EB4FULL);
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string to_string(ObjectShape shape) {
  switch (shape) {
    case ObjectShape::kSphereCluster: return "sphere-cluster";
    case ObjectShape::kBoxCluster: return "box-cluster";
    case ObjectShape::kBlob: return "blob";
  }
  return "?";
}

std::string to_string(Trajectory trajectory) {
  return trajectory == Trajectory::kOrbit ? "orbit" : "random-hemisphere";
}

ObjectShape parse_object_shape(const std::string& s) {
  if (s == "sphere-cluster") return ObjectShape::kSphereCluster;
  if (s == "box-cluster") return ObjectShape::kBoxCluster;
  if (s == "blob") return ObjectShape::kBlob;
  throw ValidationError("object_shape: unknown shape '" + s + "'");
}

Trajectory parse_trajectory(const std::string& s) {
  if (s == "orbit") return Trajectory::kOrbit;
  if (s == "random-hemisphere") return Trajectory::kRandomHemisphere;
  throw ValidationError("trajectory: unknown trajectory '" + s + "'");
}

void SceneSpec::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ValidationError(field + ": " + why);
  };
  if (n_points < 1) fail("n_points", "must be >= 1");
  if (!(scene_scale > 0.0) || !std::isfinite(scene_scale)) fail("scene_scale", "must be positive");
  if (n_views < 2) fail("n_views", "must be >= 2");
  if (!(focal_min > 0.0) || !(focal_max >= focal_min) || !std::isfinite(focal_max)) {
    fail("focal_range", "need 0 < focal_min <= focal_max");
  }
  if (width < 8 || height < 8) fail("image_size", "must be at least 8x8");
  if (!(depth_noise_sigma >= 0.0) || !std::isfinite(depth_noise_sigma)) {
    fail("depth_noise_sigma", "must be non-negative");
  }
  if (!(outlier_fraction >= 0.0 && outlier_fraction < 1.0)) {
    fail("outlier_fraction", "must lie in [0, 1)");
  }
  if (!(occlusion_fraction >= 0.0 && occlusion_fraction < 1.0)) {
    fail("occlusion_fraction", "must lie in [0, 1); a fully occluded view is infeasible");
  }
}

std::optional<double> Primitive::intersect(const Vec3& origin, const Vec3& dir) const {
  const Vec3 o = orientation.transpose() * (origin - center);
  const Vec3 d = orientation.transpose() * dir;
  if (kind == Kind::kEllipsoid) {
    const Vec3 os = o.cwiseQuotient(half_extents);
    const Vec3 ds = d.cwiseQuotient(half_extents);
    const double a = ds.squaredNorm();
    const double b = os.dot(ds);
    const double c = os.squaredNorm() - 1.0;
    const double disc = b * b - a * c;
    if (disc < 0.0 || a == 0.0) return std::nullopt;
    const double root = std::sqrt(disc);
    // Numerically stable pair of roots.
    const double q = -(b + std::copysign(root, b));
    double s0 = q / a;
    double s1 = q != 0.0 ? c / q : s0;
    if (s0 > s1) std::swap(s0, s1);
    if (s0 > 0.0) return s0;
    if (s1 > 0.0) return s1;
    return std::nullopt;
  }
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (d[k] == 0.0) {
      if (std::abs(o[k]) > half_extents[k]) return std::nullopt;
      continue;
    }
    double t0 = (-half_extents[k] - o[k]) / d[k];
    double t1 = (half_extents[k] - o[k]) / d[k];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
  }
  if (t_far < t_near || t_far <= 0.0) return std::nullopt;
  return t_near > 0.0 ? t_near : t_far;
}

bool Primitive::contains(const Vec3& x) const {
  const Vec3 local = orientation.transpose() * (x - center);
  if (kind == Kind::kEllipsoid) return local.cwiseQuotient(half_extents).squaredNorm() < 1.0;
  return (local.cwiseAbs() - half_extents).maxCoeff() < 0.0;
}

std::optional<Vec3> SceneBundle::cast_ray(int view, double u, double v) const {
  const SceneView& sv = views.at(view);
  const CameraIntrinsics& K = sv.intrinsics;
  const Vec3 dir_cam((u - K.cx()) / K.focal(), (v - K.cy()) / K.focal(), 1.0);
  const Vec3 origin = sv.pose.center();
  const Vec3 dir_world = sv.pose.rotation().transpose() * dir_cam;
  const double s = first_hit(primitives, origin, dir_world);
  if (!std::isfinite(s)) return std::nullopt;
  return s * dir_cam;
}

bool SceneBundle::sees(int view, const Vec3& x) const {
  const SceneView& sv = views.at(view);
  const Vec3 xc = sv.pose.apply(x);
  if (!(xc.z() > 0.0)) return false;
  const Vec2 px = project(xc, sv.intrinsics);
  const long i = std::lround(px.x());
  const long j = std::lround(px.y());
  if (i < 0 || j < 0 || i >= sv.depth.width() || j >= sv.depth.height()) return false;
  if (!sv.depth.valid(sv.depth.index(static_cast<int>(i), static_cast<int>(j)))) return false;
  const auto hit = cast_ray(view, px.x(), px.y());
  return hit && (*hit - xc).norm() <= 1e-7 * spec.scene_scale;
}

double SceneBundle::diameter() const {
  if (points.empty()) return 0.0;
  Vec3 lo = points.front();
  Vec3 hi = points.front();
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).norm();
}

SceneBundle generate(const SceneSpec& spec) {
  spec.validate();
  SceneBundle bundle;
  bundle.spec = spec;

  std::mt19937_64 shape_rng(mix_seed(spec.rng_seed, kStreamShape));
  bundle.primitives = make_primitives(spec, shape_rng);
  const double radius = bounding_radius(bundle.primitives);

  std::mt19937_64 cam_rng(mix_seed(spec.rng_seed, kStreamCameras));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double focal = spec.focal_min + (spec.focal_max - spec.focal_min) * unit(cam_rng);
  const CameraIntrinsics K(focal, spec.width / 2.0, spec.height / 2.0);
  // Distance at which the bounding sphere spans 80% of the shorter half-axis.
  const double distance =
      radius * (1.0 + focal / (0.8 * 0.5 * std::min(spec.width, spec.height)));

  const double phase = 2.0 * kPi * unit(cam_rng);
  for (int v = 0; v < spec.n_views; ++v) {
    Vec3 dir;
    if (spec.trajectory == Trajectory::kOrbit) {
      const double azimuth = phase + 2.0 * kPi * v / spec.n_views;
      const double elevation = 20.0 * kPi / 180.0;
      dir = Vec3(std::cos(elevation) * std::cos(azimuth),
                 std::cos(elevation) * std::sin(azimuth), std::sin(elevation));
    } else {
      // Uniform on the cap above 10 degrees of elevation.
      const double z = std::sin(10.0 * kPi / 180.0) +
                       (1.0 - std::sin(10.0 * kPi / 180.0)) * unit(cam_rng);
      const double azimuth = 2.0 * kPi * unit(cam_rng);
      const double rho = std::sqrt(1.0 - z * z);
      dir = Vec3(rho * std::cos(azimuth), rho * std::sin(azimuth), z);
    }
    const RigidTransform pose = look_at(distance * dir, Vec3::UnitZ());

    // Ray-cast the clean depth map.
    std::vector<double> depth(static_cast<std::size_t>(spec.width) * spec.height, 0.0);
    const Vec3 origin = pose.center();
    const Mat3 c2w = pose.rotation().transpose();
    for (int j = 0; j < spec.height; ++j) {
      for (int i = 0; i < spec.width; ++i) {
        const Vec3 dir_cam((i - K.cx()) / K.focal(), (j - K.cy()) / K.focal(), 1.0);
        const double s = first_hit(bundle.primitives, origin, c2w * dir_cam);
        if (std::isfinite(s)) depth[static_cast<std::size_t>(j) * spec.width + i] = s;
      }
    }

    if (spec.occlusion_fraction > 0.0) {
      std::mt19937_64 occ_rng(mix_seed(spec.rng_seed, kStreamOcclusion, v));
      std::vector<std::size_t> covered;
      for (std::size_t k = 0; k < depth.size(); ++k) {
        if (depth[k] > 0.0) covered.push_back(k);
      }
      if (!covered.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, covered.size() - 1);
        const std::size_t c = covered[pick(occ_rng)];
        const double ci = static_cast<double>(c % spec.width);
        const double cj = static_cast<double>(c / spec.width);
        const double r2 = spec.occlusion_fraction * covered.size() / kPi;
        for (std::size_t k = 0; k < depth.size(); ++k) {
          const double di = static_cast<double>(k % spec.width) - ci;
          const double dj = static_cast<double>(k / spec.width) - cj;
          if (di * di + dj * dj <= r2) depth[k] = 0.0;
        }
      }
    }

    if (spec.depth_noise_sigma > 0.0) {
      std::mt19937_64 noise_rng(mix_seed(spec.rng_seed, kStreamNoise, v));
      std::normal_distribution<double> noise(0.0, spec.depth_noise_sigma * spec.scene_scale);
      for (double& d : depth) {
        if (d > 0.0) d = std::max(d + noise(noise_rng), 1e-6 * spec.scene_scale);
      }
    }

    bundle.views.push_back({DepthMap(spec.width, spec.height, std::move(depth)), K, pose});
  }

  // Shared ground-truth cloud: surface samples seen by at least two views.
  std::mt19937_64 sample_rng(mix_seed(spec.rng_seed, kStreamSamples));
  std::uniform_int_distribution<std::size_t> pick_prim(0, bundle.primitives.size() - 1);
  const long max_attempts = 200L * spec.n_points;
  long attempts = 0;
  while (static_cast<int>(bundle.points.size()) < spec.n_points && attempts < max_attempts) {
    ++attempts;
    const std::size_t p = pick_prim(sample_rng);
    const Vec3 x = sample_surface(bundle.primitives[p], sample_rng);
    bool buried = false;
    for (std::size_t q = 0; q < bundle.primitives.size() && !buried; ++q) {
      buried = q != p && bundle.primitives[q].contains(x);
    }
    if (buried) continue;
    int seen = 0;
    for (int v = 0; v < spec.n_views && seen < 2; ++v) seen += bundle.sees(v, x) ? 1 : 0;
    if (seen >= 2) bundle.points.push_back(x);
  }
  if (static_cast<int>(bundle.points.size()) < spec.n_points) {
    throw ValidationError("n_points: only " + std::to_string(bundle.points.size()) +
                          " surface points are covisible; spec is infeasible");
  }
  int covisible = 0;
  for (const auto& x : bundle.points) {
    int seen = 0;
    for (int v = 0; v < spec.n_views && seen < 2; ++v) seen += bundle.sees(v, x) ? 1 : 0;
    covisible += seen >= 2 ? 1 : 0;
  }
  bundle.coverage = static_cast<double>(covisible) / bundle.points.size();
  return bundle;
}

RigidTransform relative_truth(const SceneBundle& bundle, int i, int j) {
  return compose(bundle.views.at(j).pose, inverse(bundle.views.at(i).pose));
}

PairKnobs PairKnobs::from_spec(const SceneSpec& spec) {
  PairKnobs k;
  k.point_noise_sigma = spec.depth_noise_sigma;
  k.outlier_fraction = spec.outlier_fraction;
  k.seed = spec.rng_seed;
  return k;
}

PointmapPair make_pair_pointmaps(const SceneBundle& bundle, int i, int j,
                                 const PairKnobs& knobs) {
  const int n_views = static_cast<int>(bundle.views.size());
  if (i < 0 || j < 0 || i >= n_views || j >= n_views) {
    throw ValidationError("make_pair_pointmaps: view index out of range");
  }
  if (!(knobs.outlier_fraction >= 0.0 && knobs.outlier_fraction < 1.0)) {
    throw ValidationError("outlier_fraction must lie in [0, 1)");
  }
  const SceneView& vi = bundle.views[i];
  const SceneView& vj = bundle.views[j];
  std::mt19937_64 rng(mix_seed(knobs.seed, kStreamPair, static_cast<std::uint64_t>(i) * 65536 + j));
  std::normal_distribution<double> noise(0.0, knobs.point_noise_sigma * bundle.spec.scene_scale);

  // Outliers are drawn in the bounding box of the object, in view i's frame.
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto& x : bundle.points) {
    const Vec3 xc = vi.pose.apply(x);
    lo = lo.cwiseMin(xc);
    hi = hi.cwiseMax(xc);
  }
  const Vec3 mid = 0.5 * (lo + hi);
  const Vec3 half = 0.75 * (hi - lo);

  const RigidTransform rel = relative_truth(bundle, i, j);
  const double clean_conf = 1.0 + std::exp(kCleanRawConfidence);
  const double bad_conf = 1.0 + std::exp(kCorruptedRawConfidence);

  // `to_view` maps a view-i-frame point into the camera whose pixels index
  // the map.
  auto corrupt = [&](const Pointmap& clean, const RigidTransform& to_view,
                     const CameraIntrinsics& K, std::vector<std::uint8_t>& corrupted) {
    std::vector<Vec3> pts(clean.points().begin(), clean.points().end());
    std::vector<double> conf(clean.size(), clean_conf);
    corrupted.assign(clean.size(), 0);
    std::vector<std::size_t> valid;
    for (std::size_t k = 0; k < clean.size(); ++k) {
      if (clean.valid(k)) valid.push_back(k);
    }
    if (knobs.point_noise_sigma > 0.0) {
      for (std::size_t k : valid) pts[k] += Vec3(noise(rng), noise(rng), noise(rng));
    }
    const auto n_bad = static_cast<std::size_t>(std::floor(knobs.outlier_fraction * valid.size()));
    if (n_bad > 0) {
      std::shuffle(valid.begin(), valid.end(), rng);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (std::size_t b = 0; b < n_bad; ++b) {
        const std::size_t k = valid[b];
        const Vec2 pixel(static_cast<double>(k % clean.width()),
                         static_cast<double>(k / clean.width()));
        Vec3 candidate;
        for (int attempt = 0;; ++attempt) {
          candidate = mid + Vec3(u(rng) * half.x(), u(rng) * half.y(), u(rng) * half.z());
          const Vec3 xc = to_view.apply(candidate);
          if (!(xc.z() > 0.0)) break;
          if ((project(xc, K) - pixel).norm() >= knobs.min_outlier_px) break;
          if (attempt > 1000) {
            // Push it along the ray's side until it clears the margin.
            candidate = to_view.rotation().transpose() *
                            (Vec3(xc.x() + xc.z(), xc.y() + xc.z(), xc.z()) -
                             to_view.translation());
            break;
          }
        }
        pts[k] = candidate;
        conf[k] = bad_conf;
        corrupted[k] = 1;
      }
    }
    return Pointmap(clean.width(), clean.height(), std::move(pts), std::move(conf),
                    {clean.mask().begin(), clean.mask().end()}, i);
  };

  PointmapPair out{pointmap_from_depth(vi.depth, vi.intrinsics, i),
                   pointmap_from_depth(vi.depth, vi.intrinsics, i), {}, {}};
  out.x11 = corrupt(out.x11, RigidTransform::identity(), vi.intrinsics, out.corrupted1);
  if (i == j) {
    out.x21 = out.x11;
    out.corrupted2 = out.corrupted1;
    return out;
  }
  const Pointmap xj = pointmap_from_depth(vj.depth, vj.intrinsics, j);
  out.x21 = corrupt(change_frame(xj, vj.pose, vi.pose, i), rel, vj.intrinsics, out.corrupted2);
  return out;
}

}  // namespace hopose
