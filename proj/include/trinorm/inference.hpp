#pragma once

// Full-cloud normal estimation with inverse-rotation recovery, the classical
// PCA baseline, the mean squared angular error metric (unoriented, radians
// squared) and the evaluation harness.

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "trinorm/nn.hpp"
#include "trinorm/patch.hpp"
#include "trinorm/shapes.hpp"

namespace trinorm {

struct EstimateResult {
  std::vector<Normal3> normals;        // one per point, order-aligned
  std::vector<std::uint8_t> fallback;  // 1 where the PCA fallback was used
  std::size_t fallback_count = 0;
};

// Per point: preprocess -> encode -> regress -> rotate back by R^T ->
// renormalize. Degenerate patches (and unstable network outputs) fall back to
// the PCA baseline normal for that point. Per-point seeds derive from the
// point's coordinates, so outputs permute together with the cloud.
EstimateResult estimate_normals(const PointCloud& cloud, const EncoderNet& encoder,
                                const EstimatorNet& estimator, const PatchConfig& config,
                                std::size_t fallback_k = 20);

struct PcaBaselineResult {
  std::vector<Normal3> normals;
  std::vector<std::uint8_t> degenerate;  // 1 where the collinear fallback fired
  std::size_t degenerate_count = 0;
};

// Hoppe-style baseline: kNN covariance, smallest-eigenvalue eigenvector,
// sign toward the centroid-to-point direction.
PcaBaselineResult pca_baseline_normals(const PointCloud& cloud, std::size_t k_neighbors);

// mean_i arccos(clamp(|pred_i . gt_i|, 0, 1))^2, radians squared.
double msae(std::span<const Normal3> pred, std::span<const Normal3> gt);

struct EvalReport {
  std::string method;
  std::string shape;
  double noise_level = 0.0;
  std::size_t n_points = 0;
  double msae_rad2 = 0.0;
  double seconds = 0.0;
  std::size_t degenerate_count = 0;
  std::uint64_t config_hash = 0;
};

struct EvalModels {
  const EncoderNet* encoder = nullptr;
  const EstimatorNet* estimator = nullptr;
  const EncoderNet* ablation_encoder = nullptr;
  const EstimatorNet* ablation_estimator = nullptr;
};

// Cross product of shapes x noise levels x methods. Valid method names:
// "ours", "ours-no-encoder", "pca-baseline". Clean shapes must carry ground
// truth; noise is applied with seeds derived from `seed`.
std::vector<EvalReport> run_evaluation(std::span<const PointCloud> clean_shapes,
                                       std::span<const double> noise_levels,
                                       std::span<const std::string> methods,
                                       const EvalModels& models, const PatchConfig& patch_config,
                                       std::size_t pca_k, std::uint64_t seed,
                                       std::uint64_t config_hash);

void write_report_csv(std::span<const EvalReport> reports, std::ostream& os);
void write_report_table(std::span<const EvalReport> reports, std::ostream& os);

}  // namespace trinorm
