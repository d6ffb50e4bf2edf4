#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/LU>
#include <Eigen/SVD>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "hopose/errors.hpp"
#include "hopose/pose_graph.hpp"

namespace hopose {

namespace {

using Block = Eigen::MatrixXd;  // p x 3 lifted rotation

struct Incidence {
  int other;
  std::size_t edge;
  bool outgoing;  // vertex is the edge's tail i
};

std::vector<std::vector<Incidence>> incidence(const PoseGraph& g) {
  std::vector<std::vector<Incidence>> adj(g.vertex_count());
  const auto edges = g.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    adj[edges[e].i].push_back({edges[e].j, e, true});
    adj[edges[e].j].push_back({edges[e].i, e, false});
  }
  return adj;
}

double lifted_objective(const PoseGraph& g, const std::vector<Block>& y) {
  double f = 0.0;
  for (const auto& e : g.edges()) {
    f += e.weight * (y[e.j] - y[e.i] * e.rotation).squaredNorm();
  }
  return f;
}

// Closest point on SO(3) (p == 3) or the Stiefel manifold St(p, 3).
Block project_block(const Block& b) {
  if (b.rows() == 3) return nearest_rotation(Mat3(b));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().transpose();
}

struct DescentStats {
  int sweeps = 0;
  bool converged = false;
  int violations = 0;
  std::vector<double> objectives;
};

// Gauss-Seidel block-coordinate descent: each block is replaced by the exact
// minimizer of the objective with all other blocks fixed.
DescentStats block_descent(const PoseGraph& g, const std::vector<std::vector<Incidence>>& adj,
                           std::vector<Block>& y, const RotationAveragingOptions& opts) {
  DescentStats stats;
  const auto edges = g.edges();
  double total_weight = 0.0;
  for (const auto& e : edges) total_weight += e.weight;
  double f = lifted_objective(g, y);
  stats.objectives.push_back(f);
  std::vector<Block> best = y;
  double best_f = f;
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    for (int v = 0; v < g.vertex_count(); ++v) {
      if (adj[v].empty()) continue;
      Block b = Block::Zero(y[v].rows(), 3);
      for (const auto& inc : adj[v]) {
        const PoseEdge& e = edges[inc.edge];
        if (inc.outgoing) {
          b += e.weight * y[inc.other] * e.rotation.transpose();
        } else {
          b += e.weight * y[inc.other] * e.rotation;
        }
      }
      y[v] = project_block(b);
    }
    ++stats.sweeps;
    const double f_new = lifted_objective(g, y);
    stats.objectives.push_back(f_new);
    // Rounding in the block projections perturbs f by about eps * sqrt(W f).
    const double slack = 1e-12 * f + 1e-13 * std::sqrt(total_weight * f) + 1e-30;
    if (f_new > f + slack) ++stats.violations;
    if (f_new < best_f) {
      best_f = f_new;
      best = y;
    }
    const bool done = f_new <= 1e-30 || (f - f_new) < opts.relative_tolerance * f;
    f = f_new;
    if (done) {
      stats.converged = true;
      break;
    }
  }
  y = std::move(best);
  return stats;
}

// Solves the unconstrained linear relaxation with the anchor block fixed to
// the identity, then projects every block onto SO(3).
std::vector<Mat3> chordal_initialization(const PoseGraph& g, int anchor,
                                         const std::vector<std::uint8_t>& active) {
  const int n = g.vertex_count();
  std::vector<int> var(n, -1);
  int n_var = 0;
  for (int v = 0; v < n; ++v) {
    if (active[v] && v != anchor) var[v] = n_var++;
  }
  std::vector<Mat3> out(n, Mat3::Identity());
  if (n_var == 0) return out;

  // Rows of M_j - M_i R_ij, transposed: X_j - R_ij^T X_i with X = M^T.
  const auto edges = g.edges();
  const int rows = 3 * static_cast<int>(edges.size());
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(rows, 3);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const double w = std::sqrt(edges[e].weight);
    const Mat3 coef_i = -w * edges[e].rotation.transpose();
    const int r0 = 3 * static_cast<int>(e);
    const auto place = [&](int vertex, const Mat3& coef) {
      if (var[vertex] < 0) {
        rhs.middleRows<3>(r0) -= coef;  // anchor block is the identity
        return;
      }
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          if (coef(a, b) != 0.0) triplets.emplace_back(r0 + a, 3 * var[vertex] + b, coef(a, b));
        }
      }
    };
    place(edges[e].j, w * Mat3::Identity());
    place(edges[e].i, coef_i);
  }
  Eigen::SparseMatrix<double> a(rows, 3 * n_var);
  a.setFromTriplets(triplets.begin(), triplets.end());
  const Eigen::SparseMatrix<double> normal = a.transpose() * a;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(normal);
  if (solver.info() != Eigen::Success) {
    throw InsufficientDataError("chordal initialization: singular system");
  }
  const Eigen::MatrixXd x = solver.solve(Eigen::MatrixXd(a.transpose() * rhs));
  for (int v = 0; v < n; ++v) {
    if (var[v] >= 0) out[v] = nearest_rotation(x.middleRows<3>(3 * var[v]).transpose());
  }
  return out;
}

std::vector<Block> to_blocks(const std::vector<Mat3>& r) {
  return {r.begin(), r.end()};
}

std::vector<Mat3> to_rotations(const std::vector<Block>& y) {
  std::vector<Mat3> out;
  out.reserve(y.size());
  for (const auto& b : y) out.emplace_back(b);
  return out;
}

// Projects lifted blocks back to SO(3): rotate the dominant 3D subspace of
// the stacked blocks onto the first three coordinates, take that 3x3 block,
// fix the reflection by majority vote and project.
std::vector<Mat3> round_lifted(const std::vector<Block>& y,
                               const std::vector<std::uint8_t>& active) {
  const int p = static_cast<int>(y.front().rows());
  int n_active = 0;
  for (auto a : active) n_active += a ? 1 : 0;
  Eigen::MatrixXd stacked(p, 3 * n_active);
  int col = 0;
  for (std::size_t v = 0; v < y.size(); ++v) {
    if (!active[v]) continue;
    stacked.middleCols(3 * col++, 3) = y[v];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeThinU);
  const Eigen::MatrixXd basis = svd.matrixU().leftCols(3);
  std::vector<Mat3> top(y.size(), Mat3::Identity());
  int negative = 0;
  for (std::size_t v = 0; v < y.size(); ++v) {
    if (!active[v]) continue;
    top[v] = basis.transpose() * y[v];
    if (top[v].determinant() < 0.0) ++negative;
  }
  const bool flip = 2 * negative > n_active;
  for (std::size_t v = 0; v < y.size(); ++v) {
    if (!active[v]) continue;
    if (flip) top[v].row(2) *= -1.0;
    top[v] = nearest_rotation(top[v]);
  }
  return top;
}

}  // namespace

double rotation_objective(const PoseGraph& g, std::span<const Mat3> rotations) {
  if (rotations.size() != static_cast<std::size_t>(g.vertex_count())) {
    throw ShapeError("rotation_objective: one rotation per vertex expected");
  }
  double f = 0.0;
  for (const auto& e : g.edges()) {
    f += e.weight * (rotations[e.j] - rotations[e.i] * e.rotation).squaredNorm();
  }
  return f;
}

RotationAveragingResult rotation_averaging(const PoseGraph& g,
                                           const RotationAveragingOptions& opts) {
  g.require_connected();
  const auto active = g.active_vertices();
  const int anchor = static_cast<int>(
      std::find(active.begin(), active.end(), std::uint8_t{1}) - active.begin());
  const auto adj = incidence(g);

  RotationAveragingResult out;
  std::vector<Mat3> init = chordal_initialization(g, anchor, active);
  out.chordal_objective = rotation_objective(g, init);

  std::vector<Block> y = to_blocks(init);
  DescentStats stats = block_descent(g, adj, y, opts);
  out.sweeps = stats.sweeps;
  out.converged = stats.converged;
  out.monotonicity_violations = stats.violations;
  out.sweep_objectives = stats.objectives;
  std::vector<Mat3> best = to_rotations(y);
  double best_f = rotation_objective(g, best);

  if (opts.staircase && best_f > 1e-24) {
    std::mt19937_64 rng(0x5eedULL);
    std::normal_distribution<double> noise(0.0, 0.1);
    for (int p = 4; p <= opts.max_rank; ++p) {
      std::vector<Block> lifted(g.vertex_count());
      for (int v = 0; v < g.vertex_count(); ++v) {
        Block b = Block::Zero(p, 3);
        b.topRows<3>() = best[v];
        if (active[v]) {
          for (int r = 0; r < p; ++r) {
            for (int c = 0; c < 3; ++c) b(r, c) += noise(rng);
          }
          b = project_block(b);
        }
        lifted[v] = b;
      }
      const DescentStats lifted_stats = block_descent(g, adj, lifted, opts);
      out.monotonicity_violations += lifted_stats.violations;

      std::vector<Block> rounded = to_blocks(round_lifted(lifted, active));
      const DescentStats polish = block_descent(g, adj, rounded, opts);
      out.monotonicity_violations += polish.violations;
      std::vector<Mat3> candidate = to_rotations(rounded);
      const double f = rotation_objective(g, candidate);
      if (f < best_f * (1.0 - opts.staircase_tolerance)) {
        best = std::move(candidate);
        best_f = f;
        out.accepted_rank = p;
        out.sweeps += polish.sweeps;
        out.converged = polish.converged;
      } else {
        break;
      }
    }
  }

  // Gauge: left-multiply so the anchor rotation is exactly the identity.
  const Mat3 gauge = best[anchor].transpose();
  out.rotations.assign(g.vertex_count(), Mat3::Identity());
  for (int v = 0; v < g.vertex_count(); ++v) {
    if (active[v] && v != anchor) out.rotations[v] = nearest_rotation(gauge * best[v]);
  }
  out.objective = rotation_objective(g, out.rotations);
  out.warning = out.monotonicity_violations > 0 || !out.converged;
  return out;
}

}  // namespace hopose
