#include "hopose/metrics.hpp"

#include <cmath>
#include <limits>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "hopose/errors.hpp"

namespace hopose {

namespace {

void require_same_length(const GlobalPoses& est, const GlobalPoses& gt) {
  if (est.size() != gt.size() || est.recovered.size() != est.size() ||
      gt.recovered.size() != gt.size()) {
    throw ShapeError("frame count mismatch: " + std::to_string(est.size()) + " estimated vs " +
                     std::to_string(gt.size()) + " ground-truth poses");
  }
}

// Frames usable for alignment: recovered in the estimate and in the truth.
std::vector<std::size_t> usable_frames(const GlobalPoses& est, const GlobalPoses& gt) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < est.size(); ++k) {
    if (est.recovered[k] && gt.recovered[k]) out.push_back(k);
  }
  return out;
}

Mat3 orientation_alignment(const GlobalPoses& est, const GlobalPoses& gt,
                           const std::vector<std::size_t>& frames) {
  Mat3 sum = Mat3::Zero();
  for (std::size_t k : frames) {
    sum += gt.poses[k].rotation().transpose() * est.poses[k].rotation();
  }
  return nearest_rotation(sum);
}

}  // namespace

GaugeAlignment estimate_alignment(const GlobalPoses& est, const GlobalPoses& gt,
                                  AlignmentMode mode) {
  require_same_length(est, gt);
  GaugeAlignment a;
  if (mode == AlignmentMode::kNone) return a;

  const auto frames = usable_frames(est, gt);
  const std::size_t needed = mode == AlignmentMode::kSimilarity ? 3 : 2;
  if (frames.size() < needed) {
    throw AlignmentError("alignment needs " + std::to_string(needed) + " recovered frames, got " +
                         std::to_string(frames.size()));
  }

  const double n = static_cast<double>(frames.size());
  Vec3 mu_est = Vec3::Zero();
  Vec3 mu_gt = Vec3::Zero();
  for (std::size_t k : frames) {
    mu_est += est.poses[k].center();
    mu_gt += gt.poses[k].center();
  }
  mu_est /= n;
  mu_gt /= n;

  Mat3 cov = Mat3::Zero();
  double var_est = 0.0;
  for (std::size_t k : frames) {
    const Vec3 de = est.poses[k].center() - mu_est;
    const Vec3 dg = gt.poses[k].center() - mu_gt;
    cov += dg * de.transpose();
    var_est += de.squaredNorm();
  }
  cov /= n;
  var_est /= n;

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) <= 1e-10 * sv(0)) {
    // Collinear or coincident centers leave the rotation about their line
    // unobservable.
    a.rotation = orientation_alignment(est, gt, frames);
    a.from_orientations = true;
    if (mode == AlignmentMode::kSimilarity) {
      if (!(var_est > 0.0)) throw AlignmentError("coincident camera centers: scale unobservable");
      double num = 0.0;
      for (std::size_t k : frames) {
        num += (gt.poses[k].center() - mu_gt).dot(a.rotation * (est.poses[k].center() - mu_est));
      }
      a.scale = num / (n * var_est);
      if (!(a.scale > 0.0)) throw AlignmentError("non-positive alignment scale");
    }
  } else {
    Mat3 s = Mat3::Identity();
    if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) s(2, 2) = -1.0;
    a.rotation = svd.matrixU() * s * svd.matrixV().transpose();
    if (mode == AlignmentMode::kSimilarity) {
      a.scale = (sv.asDiagonal() * s).trace() / var_est;
    }
  }
  a.translation = mu_gt - a.scale * a.rotation * mu_est;
  return a;
}

GlobalPoses apply_alignment(const GlobalPoses& est, const GaugeAlignment& a) {
  GlobalPoses out = est;
  for (std::size_t k = 0; k < est.size(); ++k) {
    if (!est.recovered[k]) continue;
    const RigidTransform& p = est.poses[k];
    const Mat3 r = nearest_rotation(p.rotation() * a.rotation.transpose());
    const Vec3 c = a.scale * a.rotation * p.center() + a.translation;
    out.poses[k] = RigidTransform(r, -(r * c));
  }
  return out;
}

GlobalPoses align_gauge(const GlobalPoses& est, const GlobalPoses& gt, AlignmentMode mode) {
  return apply_alignment(est, estimate_alignment(est, gt, mode));
}

namespace {

SequenceReport score(const GlobalPoses& est, const GlobalPoses& gt, const Thresholds& thr,
                     bool rotation_only) {
  require_same_length(est, gt);
  SequenceReport r;
  r.n_frames = est.size();
  r.rotation_only = rotation_only;
  if (r.n_frames == 0) throw ShapeError("evaluate: no frames");

  double rot_sum = 0.0;
  double sq_sum = 0.0;
  std::size_t tight = 0;
  std::size_t loose = 0;
  for (std::size_t k = 0; k < r.n_frames; ++k) {
    if (!est.recovered[k]) continue;
    ++r.n_recovered;
    const double rot = geodesic_deg(est.poses[k].rotation(), gt.poses[k].rotation());
    const double sq = (est.poses[k].center() - gt.poses[k].center()).squaredNorm();
    rot_sum += rot;
    sq_sum += sq;
    const double dist = rotation_only ? 0.0 : std::sqrt(sq);
    if (dist < thr.trans_tight && rot < thr.rot_tight_deg) ++tight;
    if (dist < thr.trans_loose && rot < thr.rot_loose_deg) ++loose;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double n_rec = static_cast<double>(r.n_recovered);
  r.rot_error_deg = r.n_recovered ? rot_sum / n_rec : nan;
  r.trans_error = r.n_recovered && !rotation_only ? sq_sum / n_rec : nan;
  r.trans_rmse = std::sqrt(r.trans_error);
  const double n = static_cast<double>(r.n_frames);
  r.det_rate_pct = 100.0 * n_rec / n;
  r.acc_15_15_pct = 100.0 * static_cast<double>(tight) / n;
  r.acc_30_30_pct = 100.0 * static_cast<double>(loose) / n;
  r.partial = r.n_recovered < r.n_frames;
  return r;
}

}  // namespace

SequenceReport evaluate(const GlobalPoses& est, const GlobalPoses& gt, const Thresholds& thr) {
  return score(est, gt, thr, false);
}

SequenceReport evaluate_sequence(const GlobalPoses& est, const GlobalPoses& gt,
                                 AlignmentMode mode, const Thresholds& thr) {
  try {
    return evaluate(align_gauge(est, gt, mode), gt, thr);
  } catch (const AlignmentError&) {
    const auto frames = usable_frames(est, gt);
    GaugeAlignment a;
    if (!frames.empty()) a.rotation = orientation_alignment(est, gt, frames);
    return score(apply_alignment(est, a), gt, thr, true);
  }
}

FrameSelection subsample_frames(int n_total, int n_keep) {
  if (n_total < 1) throw ValidationError("n_total: must be >= 1");
  if (n_keep < 1) throw ValidationError("n_keep: must be >= 1");
  FrameSelection out;
  if (n_keep > n_total) {
    out.clamped = true;
    n_keep = n_total;
  }
  const int stride = n_total / n_keep;
  out.indices.reserve(n_keep);
  for (int k = 0; k < n_keep; ++k) out.indices.push_back(k * stride);
  return out;
}

}  // namespace hopose
