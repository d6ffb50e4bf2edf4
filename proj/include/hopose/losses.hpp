#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "hopose/geometry.hpp"

namespace hopose {

inline constexpr double kDefaultConfidenceAlpha = 0.2;

/// Predicted and ground-truth pointmaps of one view pair, all expressed in
/// the first view's frame. The valid set of view v is the intersection of
/// the predicted and ground-truth masks.
class PointmapPairBatch {
 public:
  PointmapPairBatch(Pointmap predicted1, Pointmap predicted2, Pointmap truth1,
                    Pointmap truth2, double alpha = kDefaultConfidenceAlpha);

  const Pointmap& predicted(int view) const { return predicted_[view]; }
  const Pointmap& truth(int view) const { return truth_[view]; }
  double alpha() const { return alpha_; }
  /// Valid-pixel mask D^v (view 0 or 1).
  std::span<const std::uint8_t> domain(int view) const { return domain_[view]; }

 private:
  std::array<Pointmap, 2> predicted_;
  std::array<Pointmap, 2> truth_;
  std::array<std::vector<std::uint8_t>, 2> domain_;
  double alpha_;
};

/// Mean distance to the origin over the valid pixels of both maps.
double norm_factor(const Pointmap& pm1, const Pointmap& pm2);
/// Same, restricted to explicit masks instead of the maps' own.
double norm_factor(const Pointmap& pm1, const Pointmap& pm2,
                   std::span<const std::uint8_t> mask1,
                   std::span<const std::uint8_t> mask2);

/// Per-pixel scale-normalized regression loss of one batch.
struct RegressionLoss {
  std::array<std::vector<double>, 2> per_pixel;
  /// 1 where the pixel is in D^v; excluded pixels carry a loss of 0.
  std::array<std::vector<std::uint8_t>, 2> included;
  double pred_scale = 0.0;
  double truth_scale = 0.0;
};

RegressionLoss regr_loss(const PointmapPairBatch& batch);

/// Confidence-weighted loss, summed (not averaged) over D^1 and D^2.
/// `raw_conf` holds the unconstrained logits; the effective confidence is
/// 1 + exp(raw).
double conf_loss(const PointmapPairBatch& batch,
                 std::span<const double> raw_conf1,
                 std::span<const double> raw_conf2);

/// Effective confidence 1 + exp(raw), always > 1.
double effective_confidence(double raw);

/// Pairwise (cascade) summation; order-independent of threading.
double pairwise_sum(std::span<const double> values);

}  // namespace hopose
