#pragma once

// Triplet construction: anchor / positive / negative patches with the
// expanding-radius nearest-candidate search. Angles between normals are
// unoriented (absolute dot product), so labels do not depend on the ground
// truth's orientation convention. The anchor's rotation is applied to all
// three patches.

#include <cstdint>
#include <optional>
#include <vector>

#include "trinorm/patch.hpp"

namespace trinorm {

struct TripletConfig {
  double theta_th_deg = 20.0;     // positive/negative angle threshold
  double search_growth = 1.5;     // radius multiplier per expansion round
  double max_search_factor = 4.0; // search cap as a multiple of the patch radius
  std::uint64_t seed = 0;
  bool verify = false;            // re-check both angle invariants per triplet

  void validate() const {
    if (!(theta_th_deg > 0.0 && theta_th_deg < 90.0)) throw DataError("theta_th must be in (0, 90)");
    if (!(search_growth > 1.0)) throw DataError("search_growth must be > 1");
    if (!(max_search_factor >= 1.0)) throw DataError("max_search_factor must be >= 1");
  }
};

struct Triplet {
  AlignedPatch anchor, positive, negative;  // all carry the anchor's rotation
  Normal3 anchor_gt_normal;                 // ground truth of the anchor center, original space
};

// Angle in degrees between two unit vectors under the unoriented convention:
// arccos(clamp(|a.b|, 0, 1)), range [0, 90]. Throws DataError if either input
// norm is outside 1 +- 1e-6.
double unoriented_angle_deg(const Normal3& a, const Normal3& b);

enum class CompanionKind { positive, negative };

// Nearest cloud point (excluding the anchor) whose ground-truth normal
// satisfies the kind's angle predicate against the anchor's. Searches a ball
// of the given radius, growing it by config.search_growth up to
// config.max_search_factor * radius. Ties broken by lower index.
std::optional<std::uint32_t> find_companion(const SpatialIndex& index, const PointCloud& cloud,
                                            std::uint32_t anchor_index, CompanionKind kind,
                                            double radius, const TripletConfig& config);

// Empty optional when a companion is missing or any patch is degenerate.
std::optional<Triplet> build_triplet(const SpatialIndex& index, const PointCloud& cloud,
                                     std::uint32_t anchor_index, const PatchConfig& patch_config,
                                     const TripletConfig& triplet_config);

struct TripletBatch {
  std::vector<Triplet> triplets;
  std::size_t attempted = 0;
  std::size_t succeeded = 0;
};

// Draws `count` anchors (uniform without replacement; with replacement when
// count exceeds the cloud size), builds triplets and skips failures.
// Deterministic per seed and independent of the worker thread count.
TripletBatch sample_triplets(const PointCloud& cloud, std::size_t count,
                             const PatchConfig& patch_config, const TripletConfig& triplet_config);

}  // namespace trinorm
