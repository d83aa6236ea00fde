#pragma once

// Run configuration: profile defaults ("toy" for desk-scale minutes-long
// runs, "paper" for the full protocol), a flat key=value config-file format,
// and a canonical serialization used for config hashing.

#include <cstdint>
#include <string>
#include <vector>

#include "trinorm/dataset.hpp"
#include "trinorm/training.hpp"

namespace trinorm {

struct RunConfig {
  std::string profile = "toy";
  std::vector<std::string> train_shape_kinds;
  std::vector<std::string> val_shape_kinds;
  std::size_t points_per_shape = 10000;
  std::vector<double> noise_levels;
  std::size_t patches_per_shape = 500;
  std::size_t val_patches_per_shape = 200;
  PatchConfig patch;
  TripletConfig triplet;
  TrainConfig train;
  std::size_t pca_k = 20;
  std::uint64_t seed = 1;
};

// Profile defaults. "toy": 4 shapes x 3 noise levels x 500 patches, k=64,
// 10k-point clouds, 5/15 epochs. "paper": 5 shapes x 6 noise levels x 8000
// patches, k=500, 100k-point clouds, 5/50 epochs.
RunConfig make_profile(const std::string& name, std::uint64_t seed);

// Apply "key = value" overrides ('#' comments, blank lines ignored). Unknown
// keys are errors.
void apply_config_file(RunConfig& cfg, const std::string& path);
void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value);

// Canonical listing of every knob; hashing this pins the whole run.
std::string serialize_config(const RunConfig& cfg);
std::uint64_t config_hash(const RunConfig& cfg);

// Expand shape kind names into concrete ShapeSpecs (deterministic per-shape
// seeds, names "<kind>-<i>" / "<kind>-val-<i>") and propagate seeds into the
// nested configs.
DatasetSpec dataset_spec(const RunConfig& cfg);

}  // namespace trinorm
