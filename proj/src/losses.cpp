#include "hopose/losses.hpp"

#include <cmath>
#include <string>

#include "hopose/errors.hpp"

namespace hopose {

namespace {

void check_same_shape(const Pointmap& a, const Pointmap& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw ShapeError(std::string(what) + ": predicted and ground-truth shapes differ");
  }
}

std::vector<std::uint8_t> intersect(std::span<const std::uint8_t> a,
                                    std::span<const std::uint8_t> b) {
  std::vector<std::uint8_t> out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = (a[k] && b[k]) ? 1 : 0;
  return out;
}

}  // namespace

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

PointmapPairBatch::PointmapPairBatch(Pointmap predicted1, Pointmap predicted2,
                                     Pointmap truth1, Pointmap truth2,
                                     double alpha)
    : predicted_{std::move(predicted1), std::move(predicted2)},
      truth_{std::move(truth1), std::move(truth2)},
      alpha_(alpha) {
  check_same_shape(predicted_[0], truth_[0], "view 1");
  check_same_shape(predicted_[1], truth_[1], "view 2");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw ValidationError("alpha must be non-negative and finite");
  }
  for (int v = 0; v < 2; ++v) {
    domain_[v] = intersect(predicted_[v].mask(), truth_[v].mask());
  }
}

double norm_factor(const Pointmap& pm1, const Pointmap& pm2,
                   std::span<const std::uint8_t> mask1,
                   std::span<const std::uint8_t> mask2) {
  if (mask1.size() != pm1.size() || mask2.size() != pm2.size()) {
    throw ShapeError("norm_factor: mask size does not match pointmap");
  }
  std::vector<double> norms;
  norms.reserve(pm1.size() + pm2.size());
  for (std::size_t k = 0; k < pm1.size(); ++k) {
    if (mask1[k]) norms.push_back(pm1.point(k).norm());
  }
  for (std::size_t k = 0; k < pm2.size(); ++k) {
    if (mask2[k]) norms.push_back(pm2.point(k).norm());
  }
  if (norms.empty()) throw EmptyDomainError("norm_factor: no valid pixels");
  return pairwise_sum(norms) / static_cast<double>(norms.size());
}

double norm_factor(const Pointmap& pm1, const Pointmap& pm2) {
  return norm_factor(pm1, pm2, pm1.mask(), pm2.mask());
}

RegressionLoss regr_loss(const PointmapPairBatch& batch) {
  RegressionLoss out;
  out.pred_scale = norm_factor(batch.predicted(0), batch.predicted(1),
                               batch.domain(0), batch.domain(1));
  out.truth_scale = norm_factor(batch.truth(0), batch.truth(1), batch.domain(0),
                                batch.domain(1));
  if (!(out.pred_scale > 0.0) || !(out.truth_scale > 0.0)) {
    throw DegenerateScaleError("regr_loss: zero normalization factor");
  }
  for (int v = 0; v < 2; ++v) {
    const Pointmap& pred = batch.predicted(v);
    const Pointmap& truth = batch.truth(v);
    const auto domain = batch.domain(v);
    out.per_pixel[v].assign(pred.size(), 0.0);
    out.included[v].assign(domain.begin(), domain.end());
    for (std::size_t k = 0; k < pred.size(); ++k) {
      if (!domain[k]) continue;
      out.per_pixel[v][k] =
          (pred.point(k) / out.pred_scale - truth.point(k) / out.truth_scale).norm();
    }
  }
  return out;
}

double effective_confidence(double raw) { return 1.0 + std::exp(raw); }

namespace {

// log(1 + exp(raw)) without overflow for large logits.
double log_confidence(double raw) {
  return raw > 30.0 ? raw + std::log1p(std::exp(-raw)) : std::log1p(std::exp(raw));
}

}  // namespace

double conf_loss(const PointmapPairBatch& batch,
                 std::span<const double> raw_conf1,
                 std::span<const double> raw_conf2) {
  const std::span<const double> raw[2] = {raw_conf1, raw_conf2};
  for (int v = 0; v < 2; ++v) {
    if (raw[v].size() != batch.predicted(v).size()) {
      throw ShapeError("conf_loss: confidence grid of view " + std::to_string(v + 1) +
                       " has the wrong size");
    }
    for (std::size_t k = 0; k < raw[v].size(); ++k) {
      if (!std::isfinite(raw[v][k])) {
        throw ValidationError("conf_loss: raw confidence at view " +
                              std::to_string(v + 1) + " index " +
                              std::to_string(k) + " is not finite");
      }
    }
  }
  const RegressionLoss regr = regr_loss(batch);
  std::vector<double> terms;
  for (int v = 0; v < 2; ++v) {
    const auto domain = batch.domain(v);
    for (std::size_t k = 0; k < domain.size(); ++k) {
      if (!domain[k]) continue;
      const double c = effective_confidence(raw[v][k]);
      terms.push_back(c * regr.per_pixel[v][k] - batch.alpha() * log_confidence(raw[v][k]));
    }
  }
  return pairwise_sum(terms);
}

}  // namespace hopose
