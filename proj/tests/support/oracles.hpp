#pragma once

// Independent reference implementations used by the tests. They favour
// obviousness over speed and share no code paths with the library beyond
// its public types.

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "hopose/geometry.hpp"
#include "hopose/metrics.hpp"
#include "hopose/pose_graph.hpp"

namespace oracle {

using hopose::Mat3;
using hopose::Vec3;

/// Uniformly distributed rotation (normalized Gaussian quaternion).
Mat3 random_rotation(std::mt19937_64& rng);
/// Rotation by `deg` degrees about a random axis.
Mat3 random_rotation_by(std::mt19937_64& rng, double deg);
Mat3 axis_angle(const Vec3& axis, double deg);

/// K^{-1} (i d, j d, d) written out per component.
Vec3 backproject(double f, double cx, double cy, int i, int j, double d);

/// Smooth random depth surface of mean depth `base`, row-major.
std::vector<double> wavy_depth(std::mt19937_64& rng, int w, int h, double base);

/// Back-projection of every pixel with the principal point at the center.
std::vector<Vec3> backproject_all(const std::vector<double>& depth, int w, int h, double f);

/// View-2 pointmap expressed in view 1 for a known relative pose (R, t):
/// x1 = R^T (x2 - t). Outliers are uniform points landing >= 20 px from
/// their own pixel.
struct PnpCase {
  int w = 48;
  int h = 36;
  double f = 60.0;
  Mat3 r;
  Vec3 t;
  std::vector<Vec3> x21;
  std::vector<std::uint8_t> outlier;
};

PnpCase forward_pnp_case(std::mt19937_64& rng, double outlier_fraction = 0.0);

/// Plain-loop confidence loss: sum over both views of C l - alpha log C.
double conf_loss(const std::vector<Vec3>& pred1, const std::vector<Vec3>& pred2,
                 const std::vector<Vec3>& gt1, const std::vector<Vec3>& gt2,
                 const std::vector<std::uint8_t>& dom1, const std::vector<std::uint8_t>& dom2,
                 const std::vector<double>& raw1, const std::vector<double>& raw2, double alpha);

/// Ground-truth camera-to-world poses and a consistent (optionally noisy)
/// connected edge set between them.
struct RandomGraph {
  std::vector<Mat3> rotations;
  std::vector<Vec3> translations;
  hopose::PoseGraph graph{0};
};

struct GraphOptions {
  int n = 10;
  /// Probability of each extra (non-tree) edge.
  double density = 0.3;
  double rot_noise_deg = 0.0;
  double trans_noise = 0.0;
  double scale = 1.0;
  bool random_weights = false;
};

RandomGraph random_graph(std::mt19937_64& rng, const GraphOptions& opts);

/// Composes edges along a BFS spanning tree from the lowest active vertex.
std::vector<Mat3> chain_rotations(const hopose::PoseGraph& g);

/// Dense normal-equation solve of the translation problem, vertex 0 pinned.
std::vector<Vec3> dense_translations(const hopose::PoseGraph& g, const std::vector<Mat3>& r);

/// Applies the same camera-to-world gauge so vertex `anchor` has R = I, t = 0.
void anchor_gauge(std::vector<Mat3>& r, std::vector<Vec3>& t, int anchor);

/// First frame of each of n_keep equal blocks of floor(n / n_keep) frames.
std::vector<int> partition_subsample(int n_total, int n_keep);

/// World-to-camera poses from camera-to-world (R, t), all recovered.
hopose::GlobalPoses to_global(const std::vector<Mat3>& r, const std::vector<Vec3>& t);

/// Random world-to-camera trajectory with spread camera centers.
hopose::GlobalPoses random_trajectory(std::mt19937_64& rng, int n, double spread = 1.0);

/// Applies x_new = s Q x + tau to the world frame of every recovered pose.
hopose::GlobalPoses transform_world(const hopose::GlobalPoses& p, const Mat3& q, const Vec3& tau,
                                    double s = 1.0);

}  // namespace oracle
