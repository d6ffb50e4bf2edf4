#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace hopose {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

inline constexpr int kUnknownFrame = -1;

// Pixel convention used throughout: (i, j) = (column/x, row/y), zero-indexed.
// Grids are stored row-major, so pixel (i, j) lives at index j * width + i.

/// Per-pixel depth with validity. Invalid pixels carry depth 0; valid depths
/// are strictly positive and finite.
class DepthMap {
 public:
  DepthMap(int width, int height, std::vector<double> depth);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return depth_.size(); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * width_ + i;
  }

  double depth(std::size_t k) const { return depth_[k]; }
  double depth(int i, int j) const { return depth_[index(i, j)]; }
  bool valid(std::size_t k) const { return depth_[k] > 0.0; }
  std::span<const double> depths() const { return depth_; }
  std::size_t valid_count() const;

 private:
  int width_;
  int height_;
  std::vector<double> depth_;
};

/// Dense W x H grid of 3D points with a paired confidence map and validity
/// mask. Masked-out pixels are ignored by every loss, norm and pose
/// computation, so their point values are unconstrained (they may be NaN).
class Pointmap {
 public:
  /// Confidence defaults to 1 and the mask to all-valid when left empty.
  Pointmap(int width, int height, std::vector<Vec3> points,
           std::vector<double> confidence = {},
           std::vector<std::uint8_t> mask = {}, int frame_id = kUnknownFrame);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return points_.size(); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * width_ + i;
  }
  int frame_id() const { return frame_id_; }

  const Vec3& point(std::size_t k) const { return points_[k]; }
  const Vec3& point(int i, int j) const { return points_[index(i, j)]; }
  double confidence(std::size_t k) const { return confidence_[k]; }
  bool valid(std::size_t k) const { return mask_[k] != 0; }

  std::span<const Vec3> points() const { return points_; }
  std::span<const double> confidences() const { return confidence_; }
  std::span<const std::uint8_t> mask() const { return mask_; }
  std::size_t valid_count() const;

 private:
  int width_;
  int height_;
  std::vector<Vec3> points_;
  std::vector<double> confidence_;
  std::vector<std::uint8_t> mask_;
  int frame_id_;
};

/// Pinhole intrinsics with a single focal length and no skew.
class CameraIntrinsics {
 public:
  CameraIntrinsics(double focal, double cx, double cy);

  double focal() const { return focal_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }
  Mat3 matrix() const;
  Mat3 inverse_matrix() const;

 private:
  double focal_;
  double cx_;
  double cy_;
};

/// Rotation in SO(3) plus translation, world-to-camera: x_cam = R x_world + t.
class RigidTransform {
 public:
  static constexpr double kTolerance = 1e-9;

  RigidTransform();
  /// Throws ValidationError unless `rotation` is orthonormal with det +1
  /// within kTolerance. Use `nearest` to project an approximate matrix.
  RigidTransform(const Mat3& rotation, const Vec3& translation);

  static RigidTransform identity() { return {}; }
  /// Projects `m` onto SO(3) (polar decomposition) before constructing.
  static RigidTransform nearest(const Mat3& m, const Vec3& translation);
  static RigidTransform from_matrix(const Mat4& m);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  Mat4 matrix() const;
  Vec3 apply(const Vec3& x) const { return rotation_ * x + translation_; }
  /// Camera center in world coordinates, -R^T t.
  Vec3 center() const { return -(rotation_.transpose() * translation_); }
  RigidTransform renormalized() const;

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

/// Nearest rotation in Frobenius norm (U V^T with the determinant sign fixed).
Mat3 nearest_rotation(const Mat3& m);

bool is_rotation(const Mat3& r, double tol = RigidTransform::kTolerance);

/// Rodrigues exponential of an axis-angle vector.
Mat3 rotation_exp(const Vec3& omega);
/// Axis-angle vector of a rotation, angle in [0, pi].
Vec3 rotation_log(const Mat3& r);
Mat3 skew(const Vec3& v);

/// Back-projects every valid depth pixel through K^{-1} (i d, j d, d)^T.
/// The result lives in the camera's own frame and has unit confidence.
Pointmap pointmap_from_depth(const DepthMap& depth, const CameraIntrinsics& K,
                             int frame_id = kUnknownFrame);

/// Maps every valid point by P_dst * P_src^{-1}. Mask and confidence are kept.
Pointmap change_frame(const Pointmap& pm, const RigidTransform& src,
                      const RigidTransform& dst,
                      int dst_frame_id = kUnknownFrame);

/// a * b: apply b, then a.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform inverse(const RigidTransform& a);

/// Geodesic distance between two rotations in degrees.
double geodesic_deg(const Mat3& a, const Mat3& b);

/// Pinhole projection (f x / z + c_x, f y / z + c_y). Throws
/// BehindCameraError when z <= 0.
Vec2 project(const Vec3& point, const CameraIntrinsics& K);

}  // namespace hopose
