#include "hopose/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "hopose/errors.hpp"

namespace hopose {

namespace {

void check_dims(int width, int height) {
  if (width <= 0 || height <= 0) {
    throw ShapeError("grid dimensions must be positive, got " +
                     std::to_string(width) + "x" + std::to_string(height));
  }
}

}  // namespace

DepthMap::DepthMap(int width, int height, std::vector<double> depth)
    : width_(width), height_(height), depth_(std::move(depth)) {
  check_dims(width, height);
  if (depth_.size() != static_cast<std::size_t>(width) * height) {
    throw ShapeError("depth map has " + std::to_string(depth_.size()) +
                     " entries, expected " + std::to_string(width * height));
  }
  for (std::size_t k = 0; k < depth_.size(); ++k) {
    if (!std::isfinite(depth_[k]) || depth_[k] < 0.0) {
      throw ValidationError("depth at index " + std::to_string(k) +
                            " is negative or not finite");
    }
  }
}

std::size_t DepthMap::valid_count() const {
  return static_cast<std::size_t>(
      std::count_if(depth_.begin(), depth_.end(), [](double d) { return d > 0.0; }));
}

Pointmap::Pointmap(int width, int height, std::vector<Vec3> points,
                   std::vector<double> confidence,
                   std::vector<std::uint8_t> mask, int frame_id)
    : width_(width),
      height_(height),
      points_(std::move(points)),
      confidence_(std::move(confidence)),
      mask_(std::move(mask)),
      frame_id_(frame_id) {
  check_dims(width, height);
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (confidence_.empty()) confidence_.assign(n, 1.0);
  if (mask_.empty()) mask_.assign(n, 1);
  if (points_.size() != n || confidence_.size() != n || mask_.size() != n) {
    throw ShapeError("pointmap planes disagree with " + std::to_string(width) +
                     "x" + std::to_string(height));
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!(confidence_[k] > 0.0) || !std::isfinite(confidence_[k])) {
      throw ValidationError("confidence at index " + std::to_string(k) +
                            " must be positive and finite");
    }
    if (mask_[k] > 1) mask_[k] = 1;
  }
}

std::size_t Pointmap::valid_count() const {
  return static_cast<std::size_t>(
      std::count_if(mask_.begin(), mask_.end(), [](std::uint8_t m) { return m != 0; }));
}

CameraIntrinsics::CameraIntrinsics(double focal, double cx, double cy)
    : focal_(focal), cx_(cx), cy_(cy) {
  if (!(focal > 0.0) || !std::isfinite(focal)) {
    throw ValidationError("focal length must be positive and finite");
  }
  if (!std::isfinite(cx) || !std::isfinite(cy)) {
    throw ValidationError("principal point must be finite");
  }
}

Mat3 CameraIntrinsics::matrix() const {
  Mat3 k;
  k << focal_, 0.0, cx_, 0.0, focal_, cy_, 0.0, 0.0, 1.0;
  return k;
}

Mat3 CameraIntrinsics::inverse_matrix() const {
  const double inv_f = 1.0 / focal_;
  Mat3 k;
  k << inv_f, 0.0, -cx_ * inv_f, 0.0, inv_f, -cy_ * inv_f, 0.0, 0.0, 1.0;
  return k;
}

Mat3 nearest_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

bool is_rotation(const Mat3& r, double tol) {
  if (!r.allFinite()) return false;
  return (r.transpose() * r - Mat3::Identity()).norm() <= tol &&
         std::abs(r.determinant() - 1.0) <= tol;
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

Mat3 rotation_exp(const Vec3& omega) {
  const double theta = omega.norm();
  if (theta < 1e-12) return Mat3::Identity() + skew(omega);
  return Eigen::AngleAxisd(theta, omega / theta).toRotationMatrix();
}

Vec3 rotation_log(const Mat3& r) {
  Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

RigidTransform::RigidTransform()
    : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!is_rotation(rotation_)) {
    throw ValidationError("rotation is not in SO(3) within tolerance");
  }
  if (!translation_.allFinite()) {
    throw ValidationError("translation is not finite");
  }
}

RigidTransform RigidTransform::nearest(const Mat3& m, const Vec3& translation) {
  return RigidTransform(nearest_rotation(m), translation);
}

RigidTransform RigidTransform::from_matrix(const Mat4& m) {
  if (m.row(3) != Eigen::RowVector4d(0.0, 0.0, 0.0, 1.0)) {
    throw ValidationError("bottom row of a rigid transform must be (0, 0, 0, 1)");
  }
  return RigidTransform(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
}

Mat4 RigidTransform::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

RigidTransform RigidTransform::renormalized() const {
  return nearest(rotation_, translation_);
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return RigidTransform::nearest(a.rotation() * b.rotation(),
                                 a.rotation() * b.translation() + a.translation());
}

RigidTransform inverse(const RigidTransform& a) {
  const Mat3 rt = a.rotation().transpose();
  return RigidTransform::nearest(rt, -(rt * a.translation()));
}

double geodesic_deg(const Mat3& a, const Mat3& b) {
  const Mat3 d = a.transpose() * b;
  // atan2 of the sine (skew part) and cosine (trace) of the relative angle;
  // equal to arccos((tr - 1) / 2) but without its loss of precision near 0.
  const double cos_theta = std::clamp((d.trace() - 1.0) / 2.0, -1.0, 1.0);
  const Vec3 axis(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1));
  const double sin_theta = 0.5 * axis.norm();
  return std::atan2(sin_theta, cos_theta) * 180.0 / M_PI;
}

Vec2 project(const Vec3& point, const CameraIntrinsics& K) {
  if (!(point.z() > 0.0)) throw BehindCameraError("point is behind the camera");
  return {K.focal() * point.x() / point.z() + K.cx(),
          K.focal() * point.y() / point.z() + K.cy()};
}

Pointmap pointmap_from_depth(const DepthMap& depth, const CameraIntrinsics& K,
                             int frame_id) {
  const Mat3 k_inv = K.inverse_matrix();
  std::vector<Vec3> points(depth.size(), Vec3::Zero());
  std::vector<std::uint8_t> mask(depth.size(), 0);
  for (int j = 0; j < depth.height(); ++j) {
    for (int i = 0; i < depth.width(); ++i) {
      const std::size_t k = depth.index(i, j);
      const double d = depth.depth(k);
      if (!(d > 0.0)) continue;
      points[k] = k_inv * Vec3(i * d, j * d, d);
      // z is exactly d; keep it free of the K^{-1} row rounding.
      points[k].z() = d;
      mask[k] = 1;
    }
  }
  return Pointmap(depth.width(), depth.height(), std::move(points), {},
                  std::move(mask), frame_id);
}

Pointmap change_frame(const Pointmap& pm, const RigidTransform& src,
                      const RigidTransform& dst, int dst_frame_id) {
  // P_dst * P_src^{-1} without renormalizing, so identical poses map exactly.
  const Mat3 r = dst.rotation() * src.rotation().transpose();
  const Vec3 t = dst.translation() - r * src.translation();
  const bool same = src.rotation() == dst.rotation() &&
                    src.translation() == dst.translation();
  std::vector<Vec3> points(pm.points().begin(), pm.points().end());
  if (!same) {
    for (std::size_t k = 0; k < points.size(); ++k) {
      if (pm.valid(k)) points[k] = r * points[k] + t;
    }
  }
  return Pointmap(pm.width(), pm.height(), std::move(points),
                  {pm.confidences().begin(), pm.confidences().end()},
                  {pm.mask().begin(), pm.mask().end()}, dst_frame_id);
}

}  // namespace hopose
