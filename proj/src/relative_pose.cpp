#include "hopose/relative_pose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Cholesky>

#include "hopose/errors.hpp"
#include "p3p.hpp"

namespace hopose {

namespace {

constexpr int kFocalMaxIterations = 50;
constexpr int kRefineMaxIterations = 100;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Correspondence {
  std::size_t index;
  Vec2 pixel;
  Vec3 point;
};

struct Score {
  std::size_t inliers = 0;
  double error_sum = 0.0;

  double mean() const { return inliers ? error_sum / inliers : kInf; }
  bool better_than(const Score& o) const {
    if (inliers != o.inliers) return inliers > o.inliers;
    return mean() < o.mean();
  }
};

Score score_pose(const Mat3& r, const Vec3& t, const CameraIntrinsics& K,
                 const std::vector<Correspondence>& corr, double threshold) {
  Score s;
  for (const auto& c : corr) {
    const double e = reprojection_error(r, t, K, c.point, c.pixel);
    if (e <= threshold) {
      ++s.inliers;
      s.error_sum += e;
    }
  }
  return s;
}

std::vector<std::size_t> inlier_indices(const Mat3& r, const Vec3& t,
                                        const CameraIntrinsics& K,
                                        const std::vector<Correspondence>& corr,
                                        double threshold) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < corr.size(); ++k) {
    if (reprojection_error(r, t, K, corr[k].point, corr[k].pixel) <= threshold) {
      out.push_back(k);
    }
  }
  return out;
}

double reprojection_cost(const Mat3& r, const Vec3& t, const CameraIntrinsics& K,
                         const std::vector<Correspondence>& corr,
                         const std::vector<std::size_t>& subset) {
  double cost = 0.0;
  for (std::size_t k : subset) {
    const double e = reprojection_error(r, t, K, corr[k].point, corr[k].pixel);
    if (!std::isfinite(e)) return kInf;
    cost += e * e;
  }
  return cost;
}

// Levenberg-Marquardt on the squared reprojection error with the left
// perturbation x_cam <- exp(w) x_cam + dt.
void refine_pose(Mat3& r, Vec3& t, const CameraIntrinsics& K,
                 const std::vector<Correspondence>& corr,
                 const std::vector<std::size_t>& subset) {
  if (subset.size() < 3) return;
  const double f = K.focal();
  double cost = reprojection_cost(r, t, K, corr, subset);
  double lambda = 1e-4;
  for (int it = 0; it < kRefineMaxIterations && cost > 0.0; ++it) {
    Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
    for (std::size_t k : subset) {
      const Vec3 xc = r * corr[k].point + t;
      const double iz = 1.0 / xc.z();
      const Vec2 res(f * xc.x() * iz + K.cx() - corr[k].pixel.x(),
                     f * xc.y() * iz + K.cy() - corr[k].pixel.y());
      Eigen::Matrix<double, 2, 3> dproj;
      dproj << f * iz, 0.0, -f * xc.x() * iz * iz, 0.0, f * iz, -f * xc.y() * iz * iz;
      Eigen::Matrix<double, 2, 6> j;
      j.leftCols<3>() = -dproj * skew(xc);
      j.rightCols<3>() = dproj;
      h.noalias() += j.transpose() * j;
      g.noalias() += j.transpose() * res;
    }
    bool improved = false;
    for (int attempt = 0; attempt < 10 && !improved; ++attempt) {
      Eigen::Matrix<double, 6, 6> damped = h;
      damped.diagonal() += lambda * h.diagonal();
      const Eigen::Matrix<double, 6, 1> delta = damped.ldlt().solve(-g);
      if (!delta.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Mat3 dr = rotation_exp(delta.head<3>());
      const Mat3 r_new = nearest_rotation(dr * r);
      const Vec3 t_new = dr * t + delta.tail<3>();
      const double cost_new = reprojection_cost(r_new, t_new, K, corr, subset);
      if (cost_new < cost) {
        const bool tiny = delta.norm() < 1e-15 * (1.0 + t.norm());
        r = r_new;
        t = t_new;
        cost = cost_new;
        lambda = std::max(lambda * 0.1, 1e-12);
        improved = true;
        if (tiny) return;
      } else {
        lambda *= 10.0;
      }
    }
    if (!improved) return;
  }
}

}  // namespace

void RansacConfig::validate() const {
  if (max_iterations < 1) throw ValidationError("ransac max_iterations must be >= 1");
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw ValidationError("ransac confidence must lie in (0, 1)");
  }
  if (!(inlier_threshold_px > 0.0)) {
    throw ValidationError("ransac inlier_threshold_px must be positive");
  }
  if (min_sample < 4) throw ValidationError("ransac min_sample must be >= 4");
}

double reprojection_error(const Mat3& rotation, const Vec3& translation,
                          const CameraIntrinsics& K, const Vec3& point,
                          const Vec2& pixel) {
  const Vec3 xc = rotation * point + translation;
  if (!(xc.z() > 0.0)) return kInf;
  const double u = K.focal() * xc.x() / xc.z() + K.cx();
  const double v = K.focal() * xc.y() / xc.z() + K.cy();
  return std::hypot(u - pixel.x(), v - pixel.y());
}

CameraIntrinsics make_intrinsics(int width, int height, double focal) {
  if (width <= 0 || height <= 0) {
    throw ValidationError("image dimensions must be positive");
  }
  return CameraIntrinsics(focal, width / 2.0, height / 2.0);
}

FocalEstimate estimate_focal(const Pointmap& pm) {
  const double cx = pm.width() / 2.0;
  const double cy = pm.height() / 2.0;
  std::vector<Vec2> offsets;
  std::vector<Vec2> rays;
  for (int j = 0; j < pm.height(); ++j) {
    for (int i = 0; i < pm.width(); ++i) {
      const std::size_t k = pm.index(i, j);
      if (!pm.valid(k)) continue;
      const Vec3& x = pm.point(k);
      if (!x.allFinite() || !(x.z() > 0.0)) continue;
      if (x.x() == 0.0 && x.y() == 0.0) continue;
      offsets.emplace_back(i - cx, j - cy);
      rays.emplace_back(x.x() / x.z(), x.y() / x.z());
    }
  }
  if (offsets.size() < 8) {
    throw InsufficientDataError("estimate_focal: " + std::to_string(offsets.size()) +
                                " usable pixels, need at least 8");
  }

  std::vector<double> ratios;
  ratios.reserve(offsets.size());
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    ratios.push_back(offsets[k].norm() / rays[k].norm());
  }
  const auto mid = ratios.begin() + static_cast<std::ptrdiff_t>(ratios.size() / 2);
  std::nth_element(ratios.begin(), mid, ratios.end());

  auto objective = [&](double f) {
    double s = 0.0;
    for (std::size_t k = 0; k < offsets.size(); ++k) s += (offsets[k] - f * rays[k]).norm();
    return s;
  };

  FocalEstimate est;
  est.used_pixels = offsets.size();
  double f = *mid;
  double best_f = f;
  double best_obj = objective(f);
  for (int it = 1; it <= kFocalMaxIterations; ++it) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < offsets.size(); ++k) {
      const double w = 1.0 / std::max((offsets[k] - f * rays[k]).norm(), 1e-9);
      num += w * offsets[k].dot(rays[k]);
      den += w * rays[k].squaredNorm();
    }
    const double next = num / den;
    est.iterations = it;
    if (!(next > 0.0) || !std::isfinite(next)) break;
    const double obj = objective(next);
    if (obj <= best_obj) {
      best_obj = obj;
      best_f = next;
    }
    const bool done = std::abs(next - f) <= 1e-12 * f;
    f = next;
    if (done) {
      est.converged = true;
      break;
    }
  }
  if (!(best_f > 0.0)) {
    throw InsufficientDataError("estimate_focal: degenerate configuration");
  }
  est.focal = best_f;
  return est;
}

RelativePoseResult pnp_ransac(const Pointmap& pm2_in_1, const CameraIntrinsics& K,
                              const RansacConfig& cfg) {
  cfg.validate();
  std::vector<Correspondence> corr;
  for (int j = 0; j < pm2_in_1.height(); ++j) {
    for (int i = 0; i < pm2_in_1.width(); ++i) {
      const std::size_t k = pm2_in_1.index(i, j);
      if (!pm2_in_1.valid(k) || !pm2_in_1.point(k).allFinite()) continue;
      corr.push_back({k, Vec2(i, j), pm2_in_1.point(k)});
    }
  }
  const std::size_t n = corr.size();
  const auto min_sample = static_cast<std::size_t>(cfg.min_sample);
  if (n < min_sample) {
    throw InsufficientDataError("pnp_ransac: " + std::to_string(n) +
                                " valid pixels, need at least " +
                                std::to_string(min_sample));
  }

  const Mat3 k_inv = K.inverse_matrix();
  auto bearing = [&](const Vec2& px) {
    return (k_inv * Vec3(px.x(), px.y(), 1.0)).normalized();
  };

  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  Score best;
  Mat3 best_r = Mat3::Identity();
  Vec3 best_t = Vec3::Zero();
  bool have_best = false;
  double needed = static_cast<double>(cfg.max_iterations);
  int iter = 0;
  std::vector<std::size_t> sample(min_sample);
  std::vector<Vec3> sample_points(min_sample);

  for (; iter < cfg.max_iterations && iter < needed; ++iter) {
    for (std::size_t s = 0; s < min_sample; ++s) {
      std::size_t idx;
      do {
        idx = pick(rng);
      } while (std::find(sample.begin(), sample.begin() + s, idx) != sample.begin() + s);
      sample[s] = idx;
    }
    const std::array<Vec3, 3> bearings{bearing(corr[sample[0]].pixel),
                                       bearing(corr[sample[1]].pixel),
                                       bearing(corr[sample[2]].pixel)};
    const std::array<Vec3, 3> points{corr[sample[0]].point, corr[sample[1]].point,
                                     corr[sample[2]].point};
    const auto hypotheses = detail::solve_p3p(bearings, points);

    // Choose among the P3P roots using the remaining sample points.
    const detail::PoseHypothesis* chosen = nullptr;
    double chosen_err = kInf;
    for (const auto& h : hypotheses) {
      std::size_t behind = 0;
      for (std::size_t s = 0; s < min_sample; ++s) {
        if (!((h.rotation * corr[sample[s]].point + h.translation).z() > 0.0)) ++behind;
      }
      if (2 * behind > min_sample) continue;
      double err = 0.0;
      for (std::size_t s = 3; s < min_sample; ++s) {
        err += reprojection_error(h.rotation, h.translation, K, corr[sample[s]].point,
                                  corr[sample[s]].pixel);
      }
      if (err < chosen_err || chosen == nullptr) {
        chosen_err = err;
        chosen = &h;
      }
    }
    if (chosen == nullptr) continue;

    const Score s =
        score_pose(chosen->rotation, chosen->translation, K, corr, cfg.inlier_threshold_px);
    if (!have_best || s.better_than(best)) {
      best = s;
      best_r = chosen->rotation;
      best_t = chosen->translation;
      have_best = true;
      const double w = static_cast<double>(best.inliers) / n;
      const double p_all = std::pow(w, static_cast<double>(min_sample));
      if (p_all >= 1.0) {
        needed = 0.0;
      } else if (p_all > 0.0) {
        needed = std::log(1.0 - cfg.confidence) / std::log(1.0 - p_all);
      }
    }
  }

  if (!have_best || best.inliers < min_sample) {
    throw NoPoseFoundError("pnp_ransac: no consensus set of at least " +
                           std::to_string(min_sample) + " points after " +
                           std::to_string(iter) + " iterations");
  }

  // Refine on the consensus set, re-collect inliers, repeat while it grows.
  Mat3 r = best_r;
  Vec3 t = best_t;
  std::vector<std::size_t> inliers =
      inlier_indices(r, t, K, corr, cfg.inlier_threshold_px);
  for (int round = 0; round < 3; ++round) {
    Mat3 r_ref = r;
    Vec3 t_ref = t;
    refine_pose(r_ref, t_ref, K, corr, inliers);
    auto refined = inlier_indices(r_ref, t_ref, K, corr, cfg.inlier_threshold_px);
    if (refined.size() < inliers.size()) break;
    const bool grew = refined.size() > inliers.size();
    r = r_ref;
    t = t_ref;
    inliers = std::move(refined);
    if (!grew) break;
  }

  RelativePoseResult out;
  out.transform = RigidTransform::nearest(r, t);
  out.inlier_mask.assign(pm2_in_1.size(), 0);
  double err_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double e = reprojection_error(out.transform.rotation(), out.transform.translation(),
                                        K, corr[k].point, corr[k].pixel);
    if (e <= cfg.inlier_threshold_px) {
      out.inlier_mask[corr[k].index] = 1;
      ++out.inlier_count;
      err_sum += e;
    }
  }
  out.valid_count = n;
  out.focal = K.focal();
  out.mean_inlier_reproj_err = out.inlier_count ? err_sum / out.inlier_count : 0.0;
  out.hypothesis_inlier_count = best.inliers;
  out.iterations = iter;
  return out;
}

RelativePoseResult relative_pose(const Pointmap& x11, const Pointmap& x21,
                                 const RansacConfig& cfg) {
  if (x11.width() != x21.width() || x11.height() != x21.height()) {
    throw ShapeError("relative_pose: pointmap pair shapes differ");
  }
  const FocalEstimate focal = estimate_focal(x11);
  return pnp_ransac(x21, make_intrinsics(x21.width(), x21.height(), focal.focal), cfg);
}

}  // namespace hopose
