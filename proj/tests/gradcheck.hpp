#pragma once

// Central-difference gradient checking for the two losses composed through
// the networks. Probes carry an activation signature (relu on/off bits, pool
// argmax rows, hinge state); a parameter whose +h/-h probes cross a kink has
// no valid finite difference and is skipped, never counted as checked.

#include <cmath>
#include <cstdint>
#include <vector>

#include "trinorm/losses.hpp"
#include "trinorm/nn.hpp"
#include "trinorm/rng.hpp"

namespace gradcheck {

struct Probe {
  double value = 0.0;
  std::uint64_t sig = 0;
};

inline void mix_bit(std::uint64_t& h, bool bit) {
  h = (h ^ (bit ? 0x9e3779b97f4a7c15ull : 0x517cc1b727220a95ull)) * 0x100000001b3ull;
}

inline void mix_cache(std::uint64_t& h, const trinorm::MlpCache& cache) {
  for (std::size_t l = 1; l < cache.acts.size(); ++l) {
    const trinorm::Mat& m = cache.acts[l];
    for (std::size_t i = 0; i < m.size(); ++i) mix_bit(h, m.data()[i] > 0.0);
  }
}

inline void mix_argmax(std::uint64_t& h, const std::vector<std::uint32_t>& argmax) {
  for (std::uint32_t v : argmax) h = (h ^ v) * 0x100000001b3ull;
}

// Hinge triplet loss through the shared encoder.
inline Probe triplet_probe(const trinorm::EncoderNet& net, const trinorm::Mat& p,
                           const trinorm::Mat& s, const trinorm::Mat& t, double margin) {
  trinorm::EncoderCache ca, cs, ct;
  const std::vector<double> fp = trinorm::encoder_forward(net, p, ca);
  const std::vector<double> fs = trinorm::encoder_forward(net, s, cs);
  const std::vector<double> ft = trinorm::encoder_forward(net, t, ct);
  const trinorm::TripletLossResult loss = trinorm::triplet_loss(fp, fs, ft, {margin});
  Probe probe;
  probe.value = loss.loss;
  std::uint64_t h = 0xcbf29ce484222325ull;
  mix_cache(h, ca.mlp);
  mix_cache(h, cs.mlp);
  mix_cache(h, ct.mlp);
  mix_argmax(h, ca.argmax);
  mix_argmax(h, cs.argmax);
  mix_argmax(h, ct.argmax);
  mix_bit(h, loss.loss > 0.0);
  probe.sig = h;
  return probe;
}

// Weighted cosine loss through encoder + estimator.
inline Probe normal_probe(const trinorm::EncoderNet& enc, const trinorm::EstimatorNet& est,
                          const trinorm::Mat& patch, const std::vector<trinorm::Normal3>& gt,
                          const trinorm::Normal3& center_gt, int exponent, double sigma_deg) {
  trinorm::EncoderCache ec;
  trinorm::EstimatorCache sc;
  const std::vector<double> latent = trinorm::encoder_forward(enc, patch, ec);
  const trinorm::Normal3 pred = trinorm::estimator_forward(est, latent, sc);
  const trinorm::NormalLossResult loss =
      trinorm::normal_loss_exponent(pred, gt, center_gt, {sigma_deg}, exponent);
  Probe probe;
  probe.value = loss.loss;
  std::uint64_t h = 0xcbf29ce484222325ull;
  mix_cache(h, ec.mlp);
  mix_cache(h, sc.mlp);
  mix_argmax(h, ec.argmax);
  probe.sig = h;
  return probe;
}

struct CheckStats {
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
  double worst_rel = 0.0;
};

// Central difference on `n_params` randomly chosen parameters of `params`.
// `probe()` re-evaluates the loss; `analytic` holds the full gradient in the
// same flattened order. Returns false on the first failing comparison.
template <typename ProbeFn>
bool check_params(std::vector<trinorm::ParamRef>& params, const std::vector<double>& analytic,
                  ProbeFn&& probe, std::size_t n_params, trinorm::Rng& rng, CheckStats& stats,
                  double step = 1e-5, double tol = 1e-4) {
  std::size_t total = 0;
  for (const auto& p : params) total += p.n;
  for (std::size_t trial = 0; trial < n_params; ++trial) {
    const std::size_t flat = static_cast<std::size_t>(rng.below(total));
    std::size_t offset = flat;
    double* slot = nullptr;
    for (const auto& p : params) {
      if (offset < p.n) {
        slot = p.data + offset;
        break;
      }
      offset -= p.n;
    }
    const double saved = *slot;
    *slot = saved + step;
    const Probe plus = probe();
    *slot = saved - step;
    const Probe minus = probe();
    *slot = saved;
    if (plus.sig != minus.sig) {
      ++stats.skipped_kinks;  // finite difference straddles a kink
      continue;
    }
    const double fd = (plus.value - minus.value) / (2.0 * step);
    const double a = analytic[flat];
    const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6});
    stats.worst_rel = std::max(stats.worst_rel, rel);
    ++stats.checked;
    if (rel >= tol) return false;
  }
  return true;
}

inline std::vector<double> flatten(std::vector<trinorm::ParamRef> refs) {
  std::vector<double> out;
  for (const auto& r : refs) out.insert(out.end(), r.data, r.data + r.n);
  return out;
}

inline trinorm::Mat random_patch(std::size_t k, trinorm::Rng& rng) {
  trinorm::Mat m(k, 3);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1, 1);
  return m;
}

inline trinorm::Normal3 random_unit(trinorm::Rng& rng) {
  for (;;) {
    trinorm::Vec3 v{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double n = trinorm::norm(v);
    if (n > 0.1 && n < 1.0) return v / n;
  }
}

}  // namespace gradcheck
