#pragma once

#include <cstddef>
#include <vector>

#include "hopose/geometry.hpp"
#include "hopose/pose_graph.hpp"

namespace hopose {

enum class AlignmentMode { kNone, kRigid, kSimilarity };

/// Maps estimated world coordinates onto ground truth: x_gt = s Q x_est + tau.
struct GaugeAlignment {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double scale = 1.0;
  /// Camera centers were (near) collinear, so the rotation was taken from
  /// the camera orientations instead.
  bool from_orientations = false;
};

/// Closed-form least-squares alignment of recovered camera centers.
/// Throws AlignmentError with fewer than 2 (rigid) or 3 (similarity)
/// recovered frames, ShapeError on a frame-count mismatch.
GaugeAlignment estimate_alignment(const GlobalPoses& est, const GlobalPoses& gt,
                                  AlignmentMode mode);

/// Applies `a` to every recovered frame: R' = R Q^T, c' = s Q c + tau.
GlobalPoses apply_alignment(const GlobalPoses& est, const GaugeAlignment& a);

GlobalPoses align_gauge(const GlobalPoses& est, const GlobalPoses& gt, AlignmentMode mode);

struct Thresholds {
  /// Camera-center distance and rotation error bounds of the two accuracy
  /// columns.
  double trans_tight = 0.15;
  double rot_tight_deg = 15.0;
  double trans_loose = 0.30;
  double rot_loose_deg = 30.0;
};

struct SequenceReport {
  double rot_error_deg = 0.0;
  /// Mean squared camera-center distance.
  double trans_error = 0.0;
  double trans_rmse = 0.0;
  double det_rate_pct = 0.0;
  double acc_15_15_pct = 0.0;
  double acc_30_30_pct = 0.0;
  std::size_t n_frames = 0;
  std::size_t n_recovered = 0;
  /// Means were taken over a strict subset of the frames (det rate < 100).
  bool partial = false;
  /// Alignment failed; translation columns are NaN and the accuracies use the
  /// rotation bound alone.
  bool rotation_only = false;
};

/// Scores gauge-aligned poses. Errors are averaged over recovered frames;
/// accuracies count every frame, unrecovered ones as failures.
SequenceReport evaluate(const GlobalPoses& est, const GlobalPoses& gt,
                        const Thresholds& thresholds = {});

/// align_gauge followed by evaluate. An AlignmentError degrades the report
/// to rotation-only metrics, with rotations aligned by their chordal mean.
SequenceReport evaluate_sequence(const GlobalPoses& est, const GlobalPoses& gt,
                                 AlignmentMode mode = AlignmentMode::kRigid,
                                 const Thresholds& thresholds = {});

struct FrameSelection {
  std::vector<int> indices;
  /// n_keep exceeded n_total and was clamped.
  bool clamped = false;
};

/// Evenly spaced frames starting at 0 with stride floor(n_total / n_keep).
FrameSelection subsample_frames(int n_total, int n_keep);

}  // namespace hopose
