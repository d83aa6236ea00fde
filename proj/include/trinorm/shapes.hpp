#pragma once

// Synthetic surface samplers with exact analytic outward unit normals, plus
// Gaussian corruption. Cube/tetrahedron/cylinder carry sharp edges; sphere
// and plane are smooth.

#include <cstdint>
#include <string>

#include "trinorm/geometry.hpp"

namespace trinorm {

enum class ShapeKind { cube, tetrahedron, cylinder, sphere, plane };

ShapeKind shape_kind_from_string(const std::string& s);
std::string to_string(ShapeKind k);

// n points sampled uniformly by surface area, deterministic per seed.
// Requires n >= 100.
PointCloud generate_shape(ShapeKind kind, std::size_t n, std::uint64_t seed);

struct NoiseSpec {
  double level = 0.0;       // sigma as a fraction of the clean bbox diagonal
  std::uint64_t seed = 0;
};

// Per-coordinate i.i.d. Gaussian displacement with
// sigma = level * bbox_diagonal(cloud). Ground-truth normals pass through
// unchanged; the input is not mutated.
PointCloud add_gaussian_noise(const PointCloud& cloud, const NoiseSpec& spec);

}  // namespace trinorm
