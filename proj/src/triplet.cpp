#include "trinorm/triplet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trinorm/common.hpp"

namespace trinorm {
namespace {

constexpr double kRadPerDeg = 3.14159265358979323846 / 180.0;

// Aligned patch whose rotation is imposed (the anchor's) instead of computed.
std::optional<AlignedPatch> preprocess_with_rotation(const SpatialIndex& index, const PointCloud& cloud,
                                                     std::uint32_t center_index, const PatchConfig& config,
                                                     double radius, const RotationMatrix& rotation,
                                                     std::uint64_t patch_seed) {
  const std::optional<RawPatch> raw = extract_patch(index, cloud, center_index, radius);
  if (!raw) return std::nullopt;
  const std::vector<Vec3> scaled = center_and_scale(*raw, cloud.points[center_index]);

  Rng rng(patch_seed);
  const std::vector<std::uint32_t> pos =
      resample_positions_keep(scaled.size(), config.k, raw->center_pos, rng);

  AlignedPatch patch;
  patch.points = Mat(config.k, 3);
  patch.source_indices.reserve(config.k);
  for (std::size_t r = 0; r < config.k; ++r) {
    const Vec3 p = rotation.apply(scaled[pos[r]]);
    patch.points(r, 0) = p.x;
    patch.points(r, 1) = p.y;
    patch.points(r, 2) = p.z;
    patch.source_indices.push_back(raw->indices[pos[r]]);
  }
  patch.rotation = rotation;
  patch.center_index = center_index;
  patch.radius = radius;
  patch.source_name = cloud.name;
  return patch;
}

}  // namespace

double unoriented_angle_deg(const Normal3& a, const Normal3& b) {
  if (!is_unit(a) || !is_unit(b)) {
    throw DataError("unoriented_angle: inputs must be unit vectors");
  }
  const double c = std::clamp(std::abs(dot(a, b)), 0.0, 1.0);
  return std::acos(c) / kRadPerDeg;
}

std::optional<std::uint32_t> find_companion(const SpatialIndex& index, const PointCloud& cloud,
                                            std::uint32_t anchor_index, CompanionKind kind,
                                            double radius, const TripletConfig& config) {
  config.validate();
  if (!cloud.has_normals()) throw DataError("find_companion requires ground-truth normals");
  const Vec3 anchor = cloud.points[anchor_index];
  const Normal3& anchor_normal = cloud.normals[anchor_index];
  const double cap = config.max_search_factor * radius;

  double r = radius;
  for (;;) {
    const std::vector<std::uint32_t> ids = index.ball_query(anchor, r);
    std::optional<std::uint32_t> best;
    double best_d2 = 0.0;
    for (std::uint32_t id : ids) {
      if (id == anchor_index) continue;
      const double angle = unoriented_angle_deg(anchor_normal, cloud.normals[id]);
      const bool ok = kind == CompanionKind::positive ? angle <= config.theta_th_deg
                                                      : angle > config.theta_th_deg;
      if (!ok) continue;
      const double d2 = norm2(cloud.points[id] - anchor);
      if (!best || d2 < best_d2 || (d2 == best_d2 && id < *best)) {
        best = id;
        best_d2 = d2;
      }
    }
    if (best) return best;
    if (r >= cap) return std::nullopt;
    r = std::min(r * config.search_growth, cap);
  }
}

std::optional<Triplet> build_triplet(const SpatialIndex& index, const PointCloud& cloud,
                                     std::uint32_t anchor_index, const PatchConfig& patch_config,
                                     const TripletConfig& triplet_config) {
  if (!cloud.has_normals()) throw DataError("build_triplet requires ground-truth normals");
  patch_config.validate();
  triplet_config.validate();
  const double radius = patch_config.r_fraction * bbox_diagonal(cloud);

  const std::optional<std::uint32_t> pos_id =
      find_companion(index, cloud, anchor_index, CompanionKind::positive, radius, triplet_config);
  if (!pos_id) return std::nullopt;
  const std::optional<std::uint32_t> neg_id =
      find_companion(index, cloud, anchor_index, CompanionKind::negative, radius, triplet_config);
  if (!neg_id) return std::nullopt;

  std::optional<AlignedPatch> anchor = preprocess_patch(
      index, cloud, anchor_index, patch_config, radius, hash_u64(patch_config.seed, anchor_index));
  if (!anchor) return std::nullopt;

  std::optional<AlignedPatch> positive = preprocess_with_rotation(
      index, cloud, *pos_id, patch_config, radius, anchor->rotation, hash_u64(patch_config.seed, *pos_id));
  if (!positive) return std::nullopt;
  std::optional<AlignedPatch> negative = preprocess_with_rotation(
      index, cloud, *neg_id, patch_config, radius, anchor->rotation, hash_u64(patch_config.seed, *neg_id));
  if (!negative) return std::nullopt;

  Triplet t{std::move(*anchor), std::move(*positive), std::move(*negative),
            cloud.normals[anchor_index]};

  if (triplet_config.verify) {
    const double ap = unoriented_angle_deg(t.anchor_gt_normal, cloud.normals[*pos_id]);
    const double an = unoriented_angle_deg(t.anchor_gt_normal, cloud.normals[*neg_id]);
    if (ap > triplet_config.theta_th_deg || an <= triplet_config.theta_th_deg) {
      throw NumericError("build_triplet: angle invariant violated");
    }
  }
  return t;
}

TripletBatch sample_triplets(const PointCloud& cloud, std::size_t count,
                             const PatchConfig& patch_config, const TripletConfig& triplet_config) {
  if (count < 1) throw DataError("sample_triplets: count must be >= 1");
  if (!cloud.has_normals()) throw DataError("sample_triplets requires ground-truth normals");
  const SpatialIndex index(cloud);
  const std::size_t n = cloud.size();

  Rng rng(hash_u64(triplet_config.seed, 0x616e63686f72ull));  // "anchor"
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
    for (std::size_t i = 0; i < count; ++i) {
      anchors.push_back(static_cast<std::uint32_t>(rng.below(n)));
    }
  }

  std::vector<std::optional<Triplet>> slots(count);
  parallel_for(count, [&](std::size_t i) {
    slots[i] = build_triplet(index, cloud, anchors[i], patch_config, triplet_config);
  });

  TripletBatch batch;
  batch.attempted = count;
  for (auto& slot : slots) {
    if (slot) {
      batch.triplets.push_back(std::move(*slot));
      ++batch.succeeded;
    }
  }
  return batch;
}

}  // namespace trinorm
