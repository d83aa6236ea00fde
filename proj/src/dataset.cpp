#include "trinorm/dataset.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "trinorm/binio.hpp"
#include "trinorm/common.hpp"

namespace trinorm {

void DatasetSpec::validate() const {
  if (train_shapes.empty()) throw DataError("dataset needs at least one training shape");
  for (double level : noise_levels) {
    if (level < 0.0) throw DataError("noise levels must be non-negative");
  }
  if (noise_levels.empty()) throw DataError("dataset needs at least one noise level");
  if (patches_per_shape < 1) throw DataError("patches_per_shape must be >= 1");
  patch.validate();
  triplet.validate();
  std::set<std::string> names;
  for (const auto& s : train_shapes) names.insert(s.name);
  for (const auto& s : val_shapes) {
    if (!names.insert(s.name).second) {
      throw DataError("shape name '" + s.name + "' used in both train and validation splits");
    }
  }
}

std::vector<LabeledPatch> sample_labeled_patches(const PointCloud& cloud, std::size_t count,
                                                 const PatchConfig& config) {
  if (!cloud.has_normals()) throw DataError("labeled patches require ground-truth normals");
  config.validate();
  const SpatialIndex index(cloud);
  const double radius = config.r_fraction * bbox_diagonal(cloud);
  const std::size_t n = cloud.size();

  Rng rng(hash_u64(config.seed, 0x6c6162656cull));  // "label"
  std::vector<std::uint32_t> anchors;
  anchors.reserve(count);
  if (count <= n) {
    std::vector<std::uint32_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0u);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(pool[i], pool[j]);
      anchors.push_back(pool[i]);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) anchors.push_back(static_cast<std::uint32_t>(rng.below(n)));
  }

  std::vector<std::optional<LabeledPatch>> slots(count);
  parallel_for(count, [&](std::size_t i) {
    const std::uint32_t center = anchors[i];
    std::optional<AlignedPatch> patch = preprocess_patch(index, cloud, center, config, radius,
                                                         hash_u64(config.seed, center));
    if (!patch) return;
    LabeledPatch lp;
    lp.gt_normals.reserve(patch->source_indices.size());
    for (std::uint32_t src : patch->source_indices) {
      lp.gt_normals.push_back(patch->rotation.apply(cloud.normals[src]));
    }
    lp.center_gt = patch->rotation.apply(cloud.normals[center]);
    lp.patch = std::move(*patch);
    slots[i] = std::move(lp);
  });

  std::vector<LabeledPatch> out;
  out.reserve(count);
  for (auto& slot : slots) {
    if (slot) out.push_back(std::move(*slot));
  }
  return out;
}

namespace {

std::string noise_tag(double level) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", level);
  return buf;
}

void build_corpus(const DatasetSpec& spec, const std::vector<ShapeSpec>& shapes,
                  std::size_t per_shape, const char* split_tag, Corpus& corpus) {
  for (const ShapeSpec& shape : shapes) {
    const PointCloud clean = [&] {
      PointCloud c = generate_shape(shape.kind, shape.n_points, shape.seed);
      c.name = shape.name;
      return c;
    }();
    for (double level : spec.noise_levels) {
      PointCloud cloud = add_gaussian_noise(
          clean, {level, hash_u64(hash_str(spec.seed, shape.name.c_str()),
                                  std::bit_cast<std::uint64_t>(level))});
      cloud.name = shape.name + "+n" + noise_tag(level);
      corpus.shape_names.push_back(cloud.name);

      const std::uint64_t shape_seed = hash_str(hash_u64(spec.seed, std::bit_cast<std::uint64_t>(level)),
                                                (std::string(split_tag) + shape.name).c_str());
      PatchConfig pc = spec.patch;
      pc.seed = hash_u64(shape_seed, 0x7061746368ull);  // "patch"
      TripletConfig tc = spec.triplet;
      tc.seed = hash_u64(shape_seed, 0x74726970ull);  // "trip"

      TripletBatch batch = sample_triplets(cloud, per_shape, pc, tc);
      if (batch.succeeded == 0) {
        corpus.warnings.push_back("shape '" + cloud.name + "' yielded zero triplets");
      }
      for (Triplet& t : batch.triplets) corpus.triplets.push_back(std::move(t));

      PatchConfig lc = spec.patch;
      lc.seed = hash_u64(shape_seed, 0x6c6272ull);  // "lbr"
      std::vector<LabeledPatch> labeled = sample_labeled_patches(cloud, per_shape, lc);
      for (LabeledPatch& lp : labeled) corpus.patches.push_back(std::move(lp));
    }
  }
}

}  // namespace

Dataset build_dataset(const DatasetSpec& spec) {
  spec.validate();
  Dataset ds;
  build_corpus(spec, spec.train_shapes, spec.patches_per_shape, "train:", ds.train);
  const std::size_t val_count =
      spec.val_patches_per_shape == 0 ? spec.patches_per_shape : spec.val_patches_per_shape;
  build_corpus(spec, spec.val_shapes, val_count, "val:", ds.val);
  return ds;
}

// ---- binary caches ----------------------------------------------------------

namespace {

constexpr char kPatchMagic[9] = "TNPATCH1";
constexpr char kTripletMagic[9] = "TNTRIP01";

void write_patch_block(std::ostream& os, const AlignedPatch& p) {
  write_u32le(os, static_cast<std::uint32_t>(p.source_name.size()));
  os.write(p.source_name.data(), static_cast<std::streamsize>(p.source_name.size()));
  write_u64le(os, p.center_index);
  write_f64le(os, p.radius);
  for (double v : p.rotation.m) write_f64le(os, v);
  for (std::size_t i = 0; i < p.points.size(); ++i) write_f64le(os, p.points.data()[i]);
  for (std::uint32_t idx : p.source_indices) write_u64le(os, idx);
}

AlignedPatch read_patch_block(std::istream& is, std::size_t k) {
  AlignedPatch p;
  const std::uint32_t name_len = read_u32le(is);
  if (name_len > 4096) throw IoError("patch cache: unreasonable name length");
  p.source_name.resize(name_len);
  if (name_len > 0 && !is.read(p.source_name.data(), name_len)) {
    throw IoError("patch cache: truncated name");
  }
  p.center_index = static_cast<std::uint32_t>(read_u64le(is));
  p.radius = read_f64le(is);
  for (double& v : p.rotation.m) v = read_f64le(is);
  p.points = Mat(k, 3);
  for (std::size_t i = 0; i < p.points.size(); ++i) p.points.data()[i] = read_f64le(is);
  p.source_indices.resize(k);
  for (std::uint32_t& idx : p.source_indices) idx = static_cast<std::uint32_t>(read_u64le(is));
  return p;
}

}  // namespace

void save_patch_corpus(const std::vector<LabeledPatch>& patches, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_magic(out, kPatchMagic);
  write_u64le(out, patches.size());
  write_u64le(out, patches.empty() ? 0 : patches.front().patch.points.rows());
  write_u8(out, 1);  // labels present
  for (const LabeledPatch& lp : patches) {
    write_patch_block(out, lp.patch);
    for (const Normal3& n : lp.gt_normals) {
      write_f64le(out, n.x);
      write_f64le(out, n.y);
      write_f64le(out, n.z);
    }
    write_f64le(out, lp.center_gt.x);
    write_f64le(out, lp.center_gt.y);
    write_f64le(out, lp.center_gt.z);
  }
  if (!out) throw IoError("I/O failure writing '" + path + "'");
}

std::vector<LabeledPatch> load_patch_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  expect_magic(in, kPatchMagic, "patch cache");
  const std::uint64_t count = read_u64le(in);
  const std::uint64_t k = read_u64le(in);
  const std::uint8_t has_labels = read_u8(in);
  if (has_labels != 1) throw IoError(path + ": patch cache lacks labels");
  std::vector<LabeledPatch> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    LabeledPatch lp;
    lp.patch = read_patch_block(in, k);
    lp.gt_normals.resize(k);
    for (Normal3& n : lp.gt_normals) {
      n.x = read_f64le(in);
      n.y = read_f64le(in);
      n.z = read_f64le(in);
    }
    lp.center_gt.x = read_f64le(in);
    lp.center_gt.y = read_f64le(in);
    lp.center_gt.z = read_f64le(in);
    out.push_back(std::move(lp));
  }
  return out;
}

void save_triplet_corpus(const std::vector<Triplet>& triplets, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_magic(out, kTripletMagic);
  write_u64le(out, triplets.size());
  write_u64le(out, triplets.empty() ? 0 : triplets.front().anchor.points.rows());
  for (const Triplet& t : triplets) {
    write_f64le(out, t.anchor_gt_normal.x);
    write_f64le(out, t.anchor_gt_normal.y);
    write_f64le(out, t.anchor_gt_normal.z);
    write_patch_block(out, t.anchor);
    write_patch_block(out, t.positive);
    write_patch_block(out, t.negative);
  }
  if (!out) throw IoError("I/O failure writing '" + path + "'");
}

std::vector<Triplet> load_triplet_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  expect_magic(in, kTripletMagic, "triplet cache");
  const std::uint64_t count = read_u64le(in);
  const std::uint64_t k = read_u64le(in);
  std::vector<Triplet> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Triplet t;
    t.anchor_gt_normal.x = read_f64le(in);
    t.anchor_gt_normal.y = read_f64le(in);
    t.anchor_gt_normal.z = read_f64le(in);
    t.anchor = read_patch_block(in, k);
    t.positive = read_patch_block(in, k);
    t.negative = read_patch_block(in, k);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace trinorm
