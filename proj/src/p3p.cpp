#include "p3p.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

namespace hopose::detail {

namespace {

double eval_poly(const std::array<double, 5>& c, double x) {
  return (((c[0] * x + c[1]) * x + c[2]) * x + c[3]) * x + c[4];
}

double eval_poly_derivative(const std::array<double, 5>& c, double x) {
  return ((4.0 * c[0] * x + 3.0 * c[1]) * x + 2.0 * c[2]) * x + c[3];
}

}  // namespace

std::vector<double> real_quartic_roots(double a4, double a3, double a2,
                                       double a1, double a0) {
  std::array<double, 5> coeffs{a4, a3, a2, a1, a0};
  const double scale = std::max({std::abs(a4), std::abs(a3), std::abs(a2),
                                 std::abs(a1), std::abs(a0)});
  std::vector<double> roots;
  if (scale == 0.0) return roots;

  // Strip vanishing leading coefficients.
  int lead = 0;
  while (lead < 4 && std::abs(coeffs[lead]) <= 1e-14 * scale) ++lead;
  const int degree = 4 - lead;
  if (degree == 0) return roots;

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
  for (int k = 0; k < degree; ++k) {
    companion(0, k) = -coeffs[lead + 1 + k] / coeffs[lead];
  }
  for (int k = 1; k < degree; ++k) companion(k, k - 1) = 1.0;

  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  const auto& values = solver.eigenvalues();
  for (int k = 0; k < degree; ++k) {
    const double re = values[k].real();
    if (std::abs(values[k].imag()) > 1e-4 * (1.0 + std::abs(re))) continue;
    double x = re;
    // Newton polishing on the full polynomial.
    for (int it = 0; it < 3; ++it) {
      const double d = eval_poly_derivative(coeffs, x);
      if (d == 0.0) break;
      const double step = eval_poly(coeffs, x) / d;
      if (!std::isfinite(step)) break;
      x -= step;
    }
    roots.push_back(x);
  }
  return roots;
}

PoseHypothesis align_point_sets(std::span<const Vec3> src, std::span<const Vec3> dst) {
  Vec3 cs = Vec3::Zero();
  Vec3 cd = Vec3::Zero();
  for (std::size_t k = 0; k < src.size(); ++k) {
    cs += src[k];
    cd += dst[k];
  }
  cs /= static_cast<double>(src.size());
  cd /= static_cast<double>(dst.size());
  Mat3 h = Mat3::Zero();
  for (std::size_t k = 0; k < src.size(); ++k) {
    h += (src[k] - cs) * (dst[k] - cd).transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  const Mat3 r = svd.matrixV() * d * svd.matrixU().transpose();
  return {r, cd - r * cs};
}

std::vector<PoseHypothesis> solve_p3p(const std::array<Vec3, 3>& bearings,
                                      const std::array<Vec3, 3>& points) {
  std::vector<PoseHypothesis> out;
  const double a2 = (points[1] - points[2]).squaredNorm();
  const double b2 = (points[0] - points[2]).squaredNorm();
  const double c2 = (points[0] - points[1]).squaredNorm();
  if (a2 <= 0.0 || b2 <= 0.0 || c2 <= 0.0) return out;

  const double cos_a = bearings[1].dot(bearings[2]);
  const double cos_b = bearings[0].dot(bearings[2]);
  const double cos_g = bearings[0].dot(bearings[1]);

  const double amc = (a2 - c2) / b2;
  const double apc = (a2 + c2) / b2;
  const double ca2 = cos_a * cos_a;
  const double cb2 = cos_b * cos_b;
  const double cg2 = cos_g * cos_g;

  // Quartic in v = s3 / s1 (Grunert).
  const double q4 = (amc - 1.0) * (amc - 1.0) - 4.0 * c2 / b2 * ca2;
  const double q3 = 4.0 * (amc * (1.0 - amc) * cos_b - (1.0 - apc) * cos_a * cos_g +
                           2.0 * c2 / b2 * ca2 * cos_b);
  const double q2 = 2.0 * (amc * amc - 1.0 + 2.0 * amc * amc * cb2 +
                           2.0 * (b2 - c2) / b2 * ca2 - 4.0 * apc * cos_a * cos_b * cos_g +
                           2.0 * (b2 - a2) / b2 * cg2);
  const double q1 = 4.0 * (-amc * (1.0 + amc) * cos_b + 2.0 * a2 / b2 * cg2 * cos_b -
                           (1.0 - apc) * cos_a * cos_g);
  const double q0 = (1.0 + amc) * (1.0 + amc) - 4.0 * a2 / b2 * cg2;

  for (double v : real_quartic_roots(q4, q3, q2, q1, q0)) {
    if (!(v > 0.0)) continue;
    const double denom_b = 1.0 + v * v - 2.0 * v * cos_b;
    if (!(denom_b > 0.0)) continue;
    const double s1_sq = b2 / denom_b;
    const double s1 = std::sqrt(s1_sq);

    // u = s2 / s1 from the c^2 law of cosines; keep the root that best
    // satisfies the a^2 equation.
    std::vector<double> candidates;
    const double disc = cg2 - 1.0 + c2 / s1_sq;
    if (disc >= -1e-12) {
      const double root = std::sqrt(std::max(disc, 0.0));
      candidates.push_back(cos_g + root);
      candidates.push_back(cos_g - root);
    }
    const double denom_u = 2.0 * (cos_g - v * cos_a);
    if (std::abs(denom_u) > 1e-12) {
      candidates.push_back(((amc - 1.0) * v * v - 2.0 * amc * cos_b * v + 1.0 + amc) /
                           denom_u);
    }
    double best_u = -1.0;
    double best_res = std::numeric_limits<double>::infinity();
    for (double u : candidates) {
      if (!(u > 0.0)) continue;
      const double res = std::abs(s1_sq * (u * u + v * v - 2.0 * u * v * cos_a) - a2);
      if (res < best_res) {
        best_res = res;
        best_u = u;
      }
    }
    if (best_u <= 0.0) continue;

    const std::array<Vec3, 3> cam{s1 * bearings[0], best_u * s1 * bearings[1],
                                  v * s1 * bearings[2]};
    out.push_back(align_point_sets(points, cam));
  }
  return out;
}

}  // namespace hopose::detail
