#pragma once

// Patch pre-processing: ball extraction, translate/scale normalization, PCA
// alignment and fixed-size resampling. Degenerate patches (fewer than 3
// points, or a collinear point set) are reported as empty optionals and
// skipped by callers rather than guessed at.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trinorm/geometry.hpp"
#include "trinorm/linalg.hpp"
#include "trinorm/rng.hpp"
#include "trinorm/spatial_index.hpp"

namespace trinorm {

struct PatchConfig {
  std::size_t k = 500;          // points per aligned patch
  double r_fraction = 0.05;     // ball radius as a fraction of the bbox diagonal
  std::uint64_t seed = 0;
  bool verify = false;          // re-check rotation/row invariants on every patch

  void validate() const {
    if (k < 3) throw DataError("patch k must be >= 3");
    if (!(r_fraction > 0.0 && r_fraction < 1.0)) throw DataError("patch r_fraction must be in (0, 1)");
  }
};

// Neighborhood in original coordinates, canonically ordered by
// (distance to center, x, y, z, source index) so downstream processing does
// not depend on the source cloud's point order.
struct RawPatch {
  std::uint32_t center_index = 0;
  double radius = 0.0;
  std::vector<Vec3> points;
  std::vector<std::uint32_t> indices;   // source indices, parallel to points
  std::size_t center_pos = 0;           // position of the center point in `points`
};

struct RotationMatrix {
  // Row-major 3x3; rows are the rotated frame's x/y/z axes.
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  Vec3 apply(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  // R^T v, the inverse rotation.
  Vec3 apply_transposed(const Vec3& v) const {
    return {m[0] * v.x + m[3] * v.y + m[6] * v.z,
            m[1] * v.x + m[4] * v.y + m[7] * v.z,
            m[2] * v.x + m[5] * v.y + m[8] * v.z};
  }
  double det() const;
  // Max absolute deviation of R R^T from identity.
  double orthonormality_error() const;
};

struct AlignedPatch {
  Mat points;                            // k x 3, normalized rotated coordinates
  RotationMatrix rotation;
  std::uint32_t center_index = 0;
  double radius = 0.0;
  std::string source_name;
  std::vector<std::uint32_t> source_indices;  // per row, into the source cloud
};

// All cloud points strictly within `radius` of the center point (the center
// itself included). Empty optional if fewer than 3 points qualify.
std::optional<RawPatch> extract_patch(const SpatialIndex& index, const PointCloud& cloud,
                                      std::uint32_t center_index, double radius);

// (p - center) / radius for every patch point; the center maps to the origin.
std::vector<Vec3> center_and_scale(const RawPatch& patch, const Vec3& center);

// Rotation built from the unit eigenvectors of the point covariance:
// smallest-variance direction -> z, middle -> x, largest -> y. Sign
// convention: each of the x/y rows is flipped so its largest-magnitude
// component is positive; the z row is their cross product, forcing det +1.
// Empty optional when the two smallest eigenvalues are both below 1e-12.
std::optional<RotationMatrix> pca_rotation(std::span<const Vec3> points);

// Uniform subset without replacement (count > k), identity (count == k), or
// all points plus uniform-with-replacement duplicates (count < k). Returns
// row positions into the input list.
std::vector<std::uint32_t> resample_positions(std::size_t count, std::size_t k, Rng& rng);

// As above but the given position is always retained.
std::vector<std::uint32_t> resample_positions_keep(std::size_t count, std::size_t k,
                                                   std::size_t keep_pos, Rng& rng);

// k x 3 array from a point list per the resampling rule.
Mat resample_to_k(std::span<const Vec3> points, std::size_t k, std::uint64_t seed);

// Full pipeline: extract -> center/scale -> PCA rotate -> resample, recording
// the rotation for later inversion. radius = r_fraction * bbox_diagonal,
// which the caller passes in (so it is computed once per cloud).
std::optional<AlignedPatch> preprocess_patch(const SpatialIndex& index, const PointCloud& cloud,
                                             std::uint32_t center_index, const PatchConfig& config,
                                             double radius, std::uint64_t patch_seed);

// Convenience overload; derives radius from the cloud and the per-patch seed
// as hash(config.seed, center_index).
std::optional<AlignedPatch> preprocess_patch(const SpatialIndex& index, const PointCloud& cloud,
                                             std::uint32_t center_index, const PatchConfig& config);

}  // namespace trinorm
