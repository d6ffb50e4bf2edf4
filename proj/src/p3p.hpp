#pragma once

#include <array>
#include <span>
#include <vector>

#include "hopose/geometry.hpp"

namespace hopose::detail {

struct PoseHypothesis {
  Mat3 rotation;
  Vec3 translation;
};

/// Grunert's three-point solution. `bearings` are unit rays in the camera
/// frame, `points` the matching world points. Returns up to four poses
/// mapping world to camera.
std::vector<PoseHypothesis> solve_p3p(const std::array<Vec3, 3>& bearings,
                                      const std::array<Vec3, 3>& points);

/// Least-squares rigid alignment dst ~ R src + t (Kabsch, det fixed to +1).
PoseHypothesis align_point_sets(std::span<const Vec3> src, std::span<const Vec3> dst);

/// Real roots of a4 x^4 + ... + a0 (degree drops when leading terms vanish).
std::vector<double> real_quartic_roots(double a4, double a3, double a2, double a1,
                                       double a0);

}  // namespace hopose::detail
