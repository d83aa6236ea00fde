#include "trinorm/patch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace trinorm {

double RotationMatrix::det() const {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) -
         m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

double RotationMatrix::orthonormality_error() const {
  double err = 0.0;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      double v = 0.0;
      for (int i = 0; i < 3; ++i) v += m[r * 3 + i] * m[c * 3 + i];
      err = std::max(err, std::abs(v - (r == c ? 1.0 : 0.0)));
    }
  }
  return err;
}

std::optional<RawPatch> extract_patch(const SpatialIndex& index, const PointCloud& cloud,
                                      std::uint32_t center_index, double radius) {
  if (center_index >= cloud.size()) throw DataError("extract_patch: center index out of range");
  if (!(radius > 0.0)) throw DataError("extract_patch: radius must be positive");
  const Vec3 center = cloud.points[center_index];
  const std::vector<std::uint32_t> ids = index.ball_query(center, radius);
  if (ids.size() < 3) return std::nullopt;

  RawPatch patch;
  patch.center_index = center_index;
  patch.radius = radius;
  patch.points.reserve(ids.size());
  patch.indices.reserve(ids.size());

  // Canonical order: (squared distance, x, y, z, source index). Makes the
  // patch independent of the source cloud's point ordering.
  std::vector<std::uint32_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0u);
  std::vector<double> d2(ids.size());
  for (std::size_t j = 0; j < ids.size(); ++j) d2[j] = norm2(cloud.points[ids[j]] - center);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (d2[a] != d2[b]) return d2[a] < d2[b];
    const Vec3& pa = cloud.points[ids[a]];
    const Vec3& pb = cloud.points[ids[b]];
    if (pa.x != pb.x) return pa.x < pb.x;
    if (pa.y != pb.y) return pa.y < pb.y;
    if (pa.z != pb.z) return pa.z < pb.z;
    return ids[a] < ids[b];
  });

  bool center_found = false;
  for (std::uint32_t o : order) {
    if (ids[o] == center_index) {
      patch.center_pos = patch.points.size();
      center_found = true;
    }
    patch.points.push_back(cloud.points[ids[o]]);
    patch.indices.push_back(ids[o]);
  }
  if (!center_found) throw DataError("extract_patch: center point missing from its own ball");
  return patch;
}

std::vector<Vec3> center_and_scale(const RawPatch& patch, const Vec3& center) {
  std::vector<Vec3> out;
  out.reserve(patch.points.size());
  const double inv_r = 1.0 / patch.radius;
  for (const Vec3& p : patch.points) out.push_back((p - center) * inv_r);
  return out;
}

namespace {

// Flip so the largest-magnitude component is positive (first such component
// wins ties).
Vec3 sign_fix(const Vec3& v) {
  const double ax = std::abs(v.x), ay = std::abs(v.y), az = std::abs(v.z);
  double lead = v.x;
  if (ay > ax) lead = v.y;
  if (az > std::max(ax, ay)) lead = v.z;
  return lead < 0.0 ? -v : v;
}

}  // namespace

std::optional<RotationMatrix> pca_rotation(std::span<const Vec3> points) {
  if (points.size() < 3) return std::nullopt;
  const SymEig3 eig = eig33_sym(covariance3(points));
  // values are descending: [0]=largest, [1]=middle, [2]=smallest.
  if (eig.values[1] < 1e-12 && eig.values[2] < 1e-12) return std::nullopt;

  const Vec3 x_axis = sign_fix(eig.vectors[1]);  // middle -> x
  const Vec3 y_axis = sign_fix(eig.vectors[0]);  // largest -> y
  const Vec3 z_axis = cross(x_axis, y_axis);     // det +1 by construction

  RotationMatrix rot;
  rot.m = {x_axis.x, x_axis.y, x_axis.z,
           y_axis.x, y_axis.y, y_axis.z,
           z_axis.x, z_axis.y, z_axis.z};
  return rot;
}

std::vector<std::uint32_t> resample_positions(std::size_t count, std::size_t k, Rng& rng) {
  std::vector<std::uint32_t> pos;
  pos.reserve(k);
  if (count >= k) {
    // Partial Fisher-Yates: first k entries of a uniform permutation.
    std::vector<std::uint32_t> pool(count);
    std::iota(pool.begin(), pool.end(), 0u);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(count - i));
      std::swap(pool[i], pool[j]);
      pos.push_back(pool[i]);
    }
  } else {
    pos.resize(count);
    std::iota(pos.begin(), pos.end(), 0u);
    for (std::size_t i = count; i < k; ++i) {
      pos.push_back(static_cast<std::uint32_t>(rng.below(count)));
    }
  }
  return pos;
}

std::vector<std::uint32_t> resample_positions_keep(std::size_t count, std::size_t k,
                                                   std::size_t keep_pos, Rng& rng) {
  if (count <= k) return resample_positions(count, k, rng);
  // keep_pos first, then a uniform (k-1)-subset of the rest.
  std::vector<std::uint32_t> pool;
  pool.reserve(count - 1);
  for (std::size_t i = 0; i < count; ++i) {
    if (i != keep_pos) pool.push_back(static_cast<std::uint32_t>(i));
  }
  std::vector<std::uint32_t> pos;
  pos.reserve(k);
  pos.push_back(static_cast<std::uint32_t>(keep_pos));
  for (std::size_t i = 0; i + 1 < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
    pos.push_back(pool[i]);
  }
  return pos;
}

Mat resample_to_k(std::span<const Vec3> points, std::size_t k, std::uint64_t seed) {
  if (points.empty()) throw DataError("resample_to_k: empty input");
  Rng rng(seed);
  const std::vector<std::uint32_t> pos = resample_positions(points.size(), k, rng);
  Mat out(k, 3);
  for (std::size_t r = 0; r < k; ++r) {
    const Vec3& p = points[pos[r]];
    out(r, 0) = p.x;
    out(r, 1) = p.y;
    out(r, 2) = p.z;
  }
  return out;
}

std::optional<AlignedPatch> preprocess_patch(const SpatialIndex& index, const PointCloud& cloud,
                                             std::uint32_t center_index, const PatchConfig& config,
                                             double radius, std::uint64_t patch_seed) {
  config.validate();
  const std::optional<RawPatch> raw = extract_patch(index, cloud, center_index, radius);
  if (!raw) return std::nullopt;

  const std::vector<Vec3> scaled = center_and_scale(*raw, cloud.points[center_index]);
  const std::optional<RotationMatrix> rot = pca_rotation(scaled);
  if (!rot) return std::nullopt;

  std::vector<Vec3> rotated;
  rotated.reserve(scaled.size());
  for (const Vec3& p : scaled) rotated.push_back(rot->apply(p));

  Rng rng(patch_seed);
  const std::vector<std::uint32_t> pos =
      resample_positions_keep(rotated.size(), config.k, raw->center_pos, rng);

  AlignedPatch patch;
  patch.points = Mat(config.k, 3);
  patch.source_indices.reserve(config.k);
  for (std::size_t r = 0; r < config.k; ++r) {
    const Vec3& p = rotated[pos[r]];
    patch.points(r, 0) = p.x;
    patch.points(r, 1) = p.y;
    patch.points(r, 2) = p.z;
    patch.source_indices.push_back(raw->indices[pos[r]]);
  }
  patch.rotation = *rot;
  patch.center_index = center_index;
  patch.radius = radius;
  patch.source_name = cloud.name;

  if (config.verify) {
    if (patch.rotation.orthonormality_error() > 1e-9 || std::abs(patch.rotation.det() - 1.0) > 1e-9) {
      throw NumericError("preprocess_patch: rotation failed orthonormality check");
    }
    for (std::size_t r = 0; r < config.k; ++r) {
      const double n2 = patch.points(r, 0) * patch.points(r, 0) +
                        patch.points(r, 1) * patch.points(r, 1) +
                        patch.points(r, 2) * patch.points(r, 2);
      if (!(std::sqrt(n2) < 1.0 + 1e-9)) {
        throw NumericError("preprocess_patch: row escaped the unit ball");
      }
    }
  }
  return patch;
}

std::optional<AlignedPatch> preprocess_patch(const SpatialIndex& index, const PointCloud& cloud,
                                             std::uint32_t center_index, const PatchConfig& config) {
  const double radius = config.r_fraction * bbox_diagonal(cloud);
  return preprocess_patch(index, cloud, center_index, config, radius,
                          hash_u64(config.seed, center_index));
}

}  // namespace trinorm
