#include <algorithm>
#include <cmath>

#include <Eigen/QR>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "hopose/errors.hpp"
#include "hopose/pose_graph.hpp"

namespace hopose {

double translation_objective(const PoseGraph& g, std::span<const Mat3> rotations,
                             std::span<const Vec3> translations) {
  double f = 0.0;
  for (const auto& e : g.edges()) {
    f += e.weight *
         (rotations[e.i] * e.translation - (translations[e.j] - translations[e.i])).squaredNorm();
  }
  return f;
}

TranslationAveragingResult translation_averaging(const PoseGraph& g,
                                                 std::span<const Mat3> rotations) {
  g.require_connected();
  const int n = g.vertex_count();
  if (rotations.size() != static_cast<std::size_t>(n)) {
    throw ShapeError("translation_averaging: one rotation per vertex expected");
  }
  const auto active = g.active_vertices();
  const int anchor = static_cast<int>(
      std::find(active.begin(), active.end(), std::uint8_t{1}) - active.begin());

  // The anchor is eliminated, so the remaining unknowns carry no gauge.
  std::vector<int> var(n, -1);
  int n_var = 0;
  for (int v = 0; v < n; ++v) {
    if (active[v] && v != anchor) var[v] = n_var++;
  }

  TranslationAveragingResult out;
  out.translations.assign(n, Vec3::Zero());
  if (n_var == 0) return out;

  const auto edges = g.edges();
  const int rows = 3 * static_cast<int>(edges.size());
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd b(rows);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const double w = std::sqrt(edges[e].weight);
    const int r0 = 3 * static_cast<int>(e);
    b.segment<3>(r0) = w * (rotations[edges[e].i] * edges[e].translation);
    for (int a = 0; a < 3; ++a) {
      if (var[edges[e].j] >= 0) triplets.emplace_back(r0 + a, 3 * var[edges[e].j] + a, w);
      if (var[edges[e].i] >= 0) triplets.emplace_back(r0 + a, 3 * var[edges[e].i] + a, -w);
    }
  }
  Eigen::SparseMatrix<double> a(rows, 3 * n_var);
  a.setFromTriplets(triplets.begin(), triplets.end());
  const Eigen::SparseMatrix<double> normal = a.transpose() * a;
  const Eigen::VectorXd atb = a.transpose() * b;

  Eigen::VectorXd x;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(normal);
  bool singular = solver.info() != Eigen::Success;
  if (!singular) {
    const auto d = solver.vectorD();
    const double d_max = d.cwiseAbs().maxCoeff();
    singular = !(d.minCoeff() > 1e-12 * d_max);
  }
  if (singular) {
    // Rank deficient beyond the gauge: least-norm solution.
    out.rank_deficient = true;
    x = Eigen::MatrixXd(a).completeOrthogonalDecomposition().solve(b);
  } else {
    x = solver.solve(atb);
  }

  const Eigen::VectorXd grad = a.transpose() * (a * x - b);
  const double atb_norm = atb.norm();
  out.relative_residual = atb_norm > 0.0 ? grad.norm() / atb_norm : grad.norm();
  for (int v = 0; v < n; ++v) {
    if (var[v] >= 0) out.translations[v] = x.segment<3>(3 * var[v]);
  }
  return out;
}

}  // namespace hopose
