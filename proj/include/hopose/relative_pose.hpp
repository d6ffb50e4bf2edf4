#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hopose/geometry.hpp"

namespace hopose {

struct RansacConfig {
  int max_iterations = 1024;
  double inlier_threshold_px = 5.0;
  /// Success probability used for adaptive early stopping.
  double confidence = 0.999;
  /// Points per hypothesis: three for P3P and one for disambiguation.
  int min_sample = 4;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct FocalEstimate {
  double focal = 0.0;
  bool converged = false;
  int iterations = 0;
  std::size_t used_pixels = 0;
};

/// Robust focal length of a pointmap in its own camera frame, with the
/// principal point at the image center. Minimizes the sum of pixel distances
/// |(u - c_x, v - c_y) - f (x / z, y / z)| by Weiszfeld iterations started
/// from the median per-pixel ratio. At most 50 iterations; `converged` is
/// false when that budget runs out (the best iterate is returned).
FocalEstimate estimate_focal(const Pointmap& pm);

/// Intrinsics with the principal point at (W / 2, H / 2).
CameraIntrinsics make_intrinsics(int width, int height, double focal);

struct RelativePoseResult {
  /// World-to-camera pose of view 2 expressed relative to view 1.
  RigidTransform transform;
  std::vector<std::uint8_t> inlier_mask;
  std::size_t inlier_count = 0;
  /// Valid correspondences that entered the estimate.
  std::size_t valid_count = 0;
  double focal = 0.0;
  double mean_inlier_reproj_err = 0.0;
  /// Consensus size of the minimal-sample hypothesis that won.
  std::size_t hypothesis_inlier_count = 0;
  int iterations = 0;
};

/// PnP-RANSAC between view 2's pixel grid and its pointmap expressed in
/// view 1's frame. Masked pixels are dropped before sampling. The winning
/// hypothesis is refined by damped Gauss-Newton on its inliers.
///
/// Throws InsufficientDataError with fewer than `min_sample` valid pixels and
/// NoPoseFoundError when no hypothesis gathers `min_sample` inliers.
RelativePoseResult pnp_ransac(const Pointmap& pm2_in_1, const CameraIntrinsics& K,
                              const RansacConfig& cfg);

/// Focal from X^{1,1}, centered principal point, then PnP-RANSAC on X^{2,1}.
RelativePoseResult relative_pose(const Pointmap& x11, const Pointmap& x21,
                                 const RansacConfig& cfg);

/// Reprojection error in pixels, or +inf when the point is behind the camera.
double reprojection_error(const Mat3& rotation, const Vec3& translation,
                          const CameraIntrinsics& K, const Vec3& point,
                          const Vec2& pixel);

}  // namespace hopose
