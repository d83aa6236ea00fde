#pragma once

// Training-corpus assembly: synthetic shapes x noise levels, triplets for the
// encoder phase and labeled patches for the estimator phase, with binary
// caches ("TNPATCH1" / "TNTRIP01") for reuse across runs.

#include <cstdint>
#include <string>
#include <vector>

#include "trinorm/shapes.hpp"
#include "trinorm/triplet.hpp"

namespace trinorm {

struct ShapeSpec {
  ShapeKind kind = ShapeKind::cube;
  std::size_t n_points = 100000;
  std::uint64_t seed = 0;
  std::string name;
};

struct DatasetSpec {
  std::vector<ShapeSpec> train_shapes;
  std::vector<ShapeSpec> val_shapes;
  std::vector<double> noise_levels{0.0, 0.0025, 0.005, 0.01, 0.015, 0.025};
  std::size_t patches_per_shape = 8000;
  std::size_t val_patches_per_shape = 0;  // 0 = same as patches_per_shape
  PatchConfig patch;
  TripletConfig triplet;
  std::uint64_t seed = 0;

  void validate() const;
};

// Aligned patch plus its regression targets, everything rotated into the
// patch frame: per-row clean ground-truth normals and the center's normal.
struct LabeledPatch {
  AlignedPatch patch;
  std::vector<Normal3> gt_normals;  // one per patch row, duplicates included
  Normal3 center_gt{};
};

struct Corpus {
  std::vector<Triplet> triplets;
  std::vector<LabeledPatch> patches;
  std::vector<std::string> shape_names;
  std::vector<std::string> warnings;
};

struct Dataset {
  Corpus train, val;
};

// Per corpus shape (train/val x noise level): generate the clean cloud,
// corrupt it while keeping the clean normals as labels, then sample triplets
// and labeled patches independently. A shape yielding zero triplets is a
// warning, not an error; it still contributes labeled patches.
Dataset build_dataset(const DatasetSpec& spec);

// Labeled patch sampler used for the estimator phase (and directly by tests).
std::vector<LabeledPatch> sample_labeled_patches(const PointCloud& cloud, std::size_t count,
                                                 const PatchConfig& config);

// Binary caches.
void save_patch_corpus(const std::vector<LabeledPatch>& patches, const std::string& path);
std::vector<LabeledPatch> load_patch_corpus(const std::string& path);
void save_triplet_corpus(const std::vector<Triplet>& triplets, const std::string& path);
std::vector<Triplet> load_triplet_corpus(const std::string& path);

}  // namespace trinorm
