#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hopose/geometry.hpp"
#include "hopose/relative_pose.hpp"

namespace hopose {

/// Relative measurement between frames i and j: the pose of camera j in
/// camera i's frame, so that R_j = R_i R_ij and t_j = t_i + R_i t_ij for the
/// camera-to-world poses (R_k, t_k) being averaged.
struct PoseEdge {
  int i = 0;
  int j = 0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double weight = 1.0;
  double quality = 1.0;
  /// Temporal-neighbor edge kept below the quality threshold for connectivity.
  bool rescued = false;
};

/// Frames 0..n-1 joined by directed relative-pose edges. No self-loops and at
/// most one edge per unordered frame pair.
class PoseGraph {
 public:
  explicit PoseGraph(int n_vertices, std::vector<PoseEdge> edges = {});

  int vertex_count() const { return n_vertices_; }
  std::span<const PoseEdge> edges() const { return edges_; }
  /// Frames touched by at least one edge.
  std::vector<std::uint8_t> active_vertices() const;
  /// Connected components over the active vertices, each sorted ascending.
  std::vector<std::vector<int>> components() const;
  /// Throws DisconnectedGraphError unless the active vertices form one
  /// component, InsufficientDataError when there is no edge at all.
  void require_connected() const;

 private:
  int n_vertices_;
  std::vector<PoseEdge> edges_;
};

enum class WeightMode { kInlierCount, kConstant };

enum class PairPolicy { kAuto, kAllPairs, kWindow };

struct EdgeFilterConfig {
  /// Minimum inlier ratio (inliers / valid correspondences) for an edge.
  double quality_threshold = 0.3;
  WeightMode weight_mode = WeightMode::kInlierCount;
  double max_weight = 1.0;
  PairPolicy pair_policy = PairPolicy::kAuto;
  int window = 10;
  /// External verdicts per (min, max) frame pair; they override the
  /// quality test for the pairs they list.
  std::map<std::pair<int, int>, bool> pair_validity;
};

/// Candidate (i, j), i < j, pairs for `n_frames` frames. kAuto is a window of
/// `cfg.window` above 60 frames and all pairs otherwise.
std::vector<std::pair<int, int>> candidate_pairs(int n_frames, const EdgeFilterConfig& cfg);

struct PairMeasurement {
  int i = 0;
  int j = 0;
  RelativePoseResult result;
};

/// Converts successful pair solves into a filtered, weighted pose graph.
/// Edges failing the quality test are dropped unless they join two
/// temporally adjacent frames lying in different components, in which case
/// they are kept with `rescued` set.
PoseGraph build_graph(std::span<const PairMeasurement> pairs, int n_frames,
                      const EdgeFilterConfig& cfg);

struct RotationAveragingOptions {
  int max_sweeps = 500;
  double relative_tolerance = 1e-10;
  /// Try SO(4), SO(5) lifts after the SO(3) descent converges.
  bool staircase = true;
  int max_rank = 5;
  double staircase_tolerance = 1e-9;
};

struct RotationAveragingResult {
  /// Camera-to-world rotations, gauge-fixed at the lowest active frame.
  std::vector<Mat3> rotations;
  double objective = 0.0;
  double chordal_objective = 0.0;
  int sweeps = 0;
  bool converged = false;
  /// Set when a sweep increased the objective or the sweep budget ran out.
  bool warning = false;
  int monotonicity_violations = 0;
  /// Rank of the lift that produced the returned rotations (3 if none helped).
  int accepted_rank = 3;
  /// Objective before and after every sweep of the initial SO(3) descent.
  std::vector<double> sweep_objectives;
};

/// Sum over edges of k_ij |R_j - R_i R_ij|_F^2.
double rotation_objective(const PoseGraph& g, std::span<const Mat3> rotations);

/// Chordal initialization, block-coordinate descent, optional rank staircase.
RotationAveragingResult rotation_averaging(const PoseGraph& g,
                                           const RotationAveragingOptions& opts = {});

struct TranslationAveragingResult {
  /// Camera-to-world positions, t_0 = 0 at the anchor frame.
  std::vector<Vec3> translations;
  /// |A^T (A x - b)| / |A^T b| of the solved normal equations.
  double relative_residual = 0.0;
  bool rank_deficient = false;
};

/// Sum over edges of k_ij |R_i t_ij - (t_j - t_i)|^2.
double translation_objective(const PoseGraph& g, std::span<const Mat3> rotations,
                             std::span<const Vec3> translations);

/// Weighted linear least squares with the lowest active frame pinned at the
/// origin.
TranslationAveragingResult translation_averaging(const PoseGraph& g,
                                                 std::span<const Mat3> rotations);

struct GlobalPoses {
  /// World-to-camera poses; the world frame is the anchor camera's frame.
  std::vector<RigidTransform> poses;
  std::vector<std::uint8_t> recovered;

  std::size_t size() const { return poses.size(); }
};

/// Packs camera-to-world averaging output into world-to-camera poses.
/// Unrecovered frames get identity placeholders.
GlobalPoses assemble_global(std::span<const Mat3> rotations,
                            std::span<const Vec3> translations,
                            std::span<const std::uint8_t> recovered);

}  // namespace hopose
