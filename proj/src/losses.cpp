#include "trinorm/losses.hpp"

#include <cmath>

#include "trinorm/common.hpp"
#include "trinorm/kernels.hpp"

namespace trinorm {
namespace {

constexpr double kRadPerDeg = 3.14159265358979323846 / 180.0;

double diff_norm(std::span<const double> a, std::span<const double> b, std::vector<double>& d) {
  d.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return std::sqrt(kernels::ops().dot(d.data(), d.data(), d.size()));
}

}  // namespace

TripletLossResult triplet_loss(std::span<const double> f_anchor,
                               std::span<const double> f_positive,
                               std::span<const double> f_negative, TripletMargin margin) {
  if (f_anchor.size() != f_positive.size() || f_anchor.size() != f_negative.size()) {
    throw DataError("triplet_loss: embedding dimensions differ");
  }
  if (margin.m < 0.0) throw DataError("triplet_loss: margin must be >= 0");
  const std::size_t n = f_anchor.size();

  std::vector<double> dps, dpt;
  const double dist_ps = diff_norm(f_anchor, f_positive, dps);
  const double dist_pt = diff_norm(f_anchor, f_negative, dpt);
  const double arg = dist_ps - dist_pt + margin.m;

  TripletLossResult out;
  out.d_anchor.assign(n, 0.0);
  out.d_positive.assign(n, 0.0);
  out.d_negative.assign(n, 0.0);
  if (arg <= 0.0) return out;  // clamped region; subgradient 0 at the hinge
  out.loss = arg;

  if (dist_ps > 1e-12) {
    const double inv = 1.0 / dist_ps;
    for (std::size_t i = 0; i < n; ++i) {
      out.d_anchor[i] += dps[i] * inv;
      out.d_positive[i] -= dps[i] * inv;
    }
  }
  if (dist_pt > 1e-12) {
    const double inv = 1.0 / dist_pt;
    for (std::size_t i = 0; i < n; ++i) {
      out.d_anchor[i] -= dpt[i] * inv;
      out.d_negative[i] += dpt[i] * inv;
    }
  }
  return out;
}

double weight_fn(const Normal3& n_i, const Normal3& n_j, SupportAngle sigma) {
  if (!(sigma.sigma_s_deg > 0.0 && sigma.sigma_s_deg < 90.0)) {
    throw DataError("weight_fn: support angle must be in (0, 90) degrees");
  }
  const double denom = 1.0 - std::cos(sigma.sigma_s_deg * kRadPerDeg);
  return std::exp(-(1.0 - dot(n_i, n_j)) / denom);
}

NormalLossResult normal_loss_exponent(const Normal3& pred, std::span<const Normal3> patch_gt,
                                      const Normal3& center_gt, SupportAngle sigma, int exponent) {
  if (patch_gt.empty()) throw DataError("normal_loss: empty neighbor list");
  if (exponent <= 0 || exponent % 2 != 0) {
    throw DataError("normal_loss: exponent must be a positive even integer");
  }
  double num = 0.0;
  double den = 0.0;
  Vec3 grad{0, 0, 0};
  const double e = static_cast<double>(exponent);
  for (const Normal3& nj : patch_gt) {
    const double w = weight_fn(center_gt, nj, sigma);
    const double c = dot(pred, nj);
    // c^e and e*c^(e-1) via one pow of the even power's base
    const double c_pow_minus1 = std::pow(c, exponent - 1);
    num += (1.0 - c_pow_minus1 * c) * w;
    den += w;
    grad = grad + nj * (-e * c_pow_minus1 * w);
  }
  NormalLossResult out;
  out.loss = num / den;
  out.d_pred = grad / den;
  return out;
}

}  // namespace trinorm
