#pragma once

// The two training objectives with analytic gradients: the hinge triplet
// loss over latent embeddings and the weighted cosine-similarity loss for
// normal regression, plus the angular weight function.

#include <span>
#include <vector>

#include "trinorm/geometry.hpp"

namespace trinorm {

struct TripletMargin {
  double m = 0.0;
};

struct SupportAngle {
  double sigma_s_deg = 15.0;
};

struct TripletLossResult {
  double loss = 0.0;
  std::vector<double> d_anchor, d_positive, d_negative;
};

// max(||fP - fS|| - ||fP - fT|| + m, 0). Gradients are zero in the clamped
// region and at the hinge itself; norm gradients vanish when the pair
// distance underflows 1e-12.
TripletLossResult triplet_loss(std::span<const double> f_anchor,
                               std::span<const double> f_positive,
                               std::span<const double> f_negative, TripletMargin margin);

// exp(-(1 - n_i . n_j) / (1 - cos sigma_s)); strictly decreasing in the
// angle, range (0, 1].
double weight_fn(const Normal3& n_i, const Normal3& n_j, SupportAngle sigma);

struct NormalLossResult {
  double loss = 0.0;
  Vec3 d_pred{};
};

// sum_j (1 - (pred . n_j)^e) w_j / sum_j w_j with w_j = weight_fn(center_gt,
// n_j). `pred` must be unit; the gradient is w.r.t. the unit prediction
// (callers chain it through their own normalization). exponent must be a
// positive even integer; 8 reproduces the default objective.
NormalLossResult normal_loss_exponent(const Normal3& pred, std::span<const Normal3> patch_gt,
                                      const Normal3& center_gt, SupportAngle sigma, int exponent);

inline NormalLossResult normal_loss(const Normal3& pred, std::span<const Normal3> patch_gt,
                                    const Normal3& center_gt, SupportAngle sigma) {
  return normal_loss_exponent(pred, patch_gt, center_gt, sigma, 8);
}

}  // namespace trinorm
