#pragma once

// End-to-end drivers shared by the CLI, the ablation harnesses and the
// acceptance suite: dataset build + two-phase training + validation-set
// evaluation, the loss-exponent ablation and the patch-size sweep.

#include <cstdint>
#include <string>
#include <vector>

#include "trinorm/config.hpp"
#include "trinorm/inference.hpp"

namespace trinorm {

Dataset build_run_dataset(const RunConfig& cfg);

// As build_run_dataset, but backed by the binary corpus caches under
// cache_dir. A config-hash stamp invalidates stale caches.
Dataset load_or_build_dataset(const RunConfig& cfg, const std::string& cache_dir);

struct PipelineResult {
  EncoderNet encoder;
  EstimatorNet estimator;
  std::vector<EpochStats> encoder_history;
  std::vector<EpochStats> estimator_history;
};

// Phase (a) then phase (b). With cfg.train.ablation_no_encoder set, the
// encoder phase is skipped and both networks train jointly on the patch loss.
PipelineResult train_pipeline(const RunConfig& cfg, const Dataset& dataset);

// Clean validation clouds regenerated from the config (with ground truth).
std::vector<PointCloud> validation_clouds(const RunConfig& cfg);

struct ExponentAblationRow {
  int exponent = 0;
  double msae_rad2 = 0.0;
  std::uint64_t encoder_hash = 0;  // identical across rows by construction
};

// Trains the encoder once, then one estimator per exponent on the same
// frozen encoder and corpus; reports validation MSAE at 0.5% noise.
std::vector<ExponentAblationRow> ablate_exponent(const RunConfig& cfg,
                                                 const std::vector<int>& exponents);

struct PatchSizeSweepEntry {
  double r_fraction = 0.0;
  std::size_t k = 0;
  std::vector<EvalReport> reports;
};

// Default sweep sizes: (1%,20) (2%,50) (3%,100) (4%,250) (5%,500) (6%,500).
std::vector<std::pair<double, std::size_t>> default_sweep_sizes();

// Trains and evaluates the full pipeline once per (r_fraction, k).
std::vector<PatchSizeSweepEntry> patch_size_sweep(
    const RunConfig& cfg, const std::vector<std::pair<double, std::size_t>>& sizes);

}  // namespace trinorm
