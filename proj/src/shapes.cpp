#include "trinorm/shapes.hpp"

#include <cmath>

#include "trinorm/rng.hpp"

namespace trinorm {
namespace {

constexpr double kPi = 3.14159265358979323846;

void sample_cube(PointCloud& cloud, std::size_t n, Rng& rng) {
  // Unit cube centered at the origin, six equal-area faces.
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t face = rng.below(6);
    const int axis = static_cast<int>(face / 2);
    const double sign = (face % 2 == 0) ? 1.0 : -1.0;
    const double u = rng.uniform(-0.5, 0.5);
    const double v = rng.uniform(-0.5, 0.5);
    Vec3 p{0, 0, 0}, nrm{0, 0, 0};
    if (axis == 0) {
      p = {sign * 0.5, u, v};
      nrm = {sign, 0, 0};
    } else if (axis == 1) {
      p = {u, sign * 0.5, v};
      nrm = {0, sign, 0};
    } else {
      p = {u, v, sign * 0.5};
      nrm = {0, 0, sign};
    }
    cloud.points.push_back(p);
    cloud.normals.push_back(nrm);
  }
}

void sample_tetrahedron(PointCloud& cloud, std::size_t n, Rng& rng) {
  // Regular tetrahedron centered at the origin.
  const Vec3 verts[4] = {{0.5, 0.5, 0.5}, {0.5, -0.5, -0.5}, {-0.5, 0.5, -0.5}, {-0.5, -0.5, 0.5}};
  const int faces[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
  Vec3 face_normals[4];
  for (int f = 0; f < 4; ++f) {
    const Vec3& a = verts[faces[f][0]];
    const Vec3& b = verts[faces[f][1]];
    const Vec3& c = verts[faces[f][2]];
    Vec3 nrm = normalized(cross(b - a, c - a));
    if (dot(nrm, a) < 0.0) nrm = -nrm;  // outward (centroid at origin)
    face_normals[f] = nrm;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const int f = static_cast<int>(rng.below(4));
    const Vec3& a = verts[faces[f][0]];
    const Vec3& b = verts[faces[f][1]];
    const Vec3& c = verts[faces[f][2]];
    const double su = std::sqrt(rng.uniform01());
    const double v = rng.uniform01();
    const Vec3 p = a * (1.0 - su) + b * (su * (1.0 - v)) + c * (su * v);
    cloud.points.push_back(p);
    cloud.normals.push_back(face_normals[f]);
  }
}

void sample_cylinder(PointCloud& cloud, std::size_t n, Rng& rng) {
  // Closed cylinder, radius 0.5, height 1: lateral area pi, caps pi/4 each.
  const double lateral_frac = 2.0 / 3.0;
  const double cap_frac = 1.0 / 6.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    const double phi = rng.uniform(0.0, 2.0 * kPi);
    if (u < lateral_frac) {
      const double z = rng.uniform(-0.5, 0.5);
      cloud.points.push_back({0.5 * std::cos(phi), 0.5 * std::sin(phi), z});
      cloud.normals.push_back({std::cos(phi), std::sin(phi), 0.0});
    } else {
      const double sign = u < lateral_frac + cap_frac ? 1.0 : -1.0;
      const double r = 0.5 * std::sqrt(rng.uniform01());
      cloud.points.push_back({r * std::cos(phi), r * std::sin(phi), sign * 0.5});
      cloud.normals.push_back({0.0, 0.0, sign});
    }
  }
}

void sample_sphere(PointCloud& cloud, std::size_t n, Rng& rng) {
  // Unit sphere at the origin; normal equals the position.
  for (std::size_t i = 0; i < n; ++i) {
    const double z = rng.uniform(-1.0, 1.0);
    const double phi = rng.uniform(0.0, 2.0 * kPi);
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Vec3 d{rho * std::cos(phi), rho * std::sin(phi), z};
    cloud.points.push_back(d);
    cloud.normals.push_back(d);
  }
}

void sample_plane(PointCloud& cloud, std::size_t n, Rng& rng) {
  for (std::size_t i = 0; i < n; ++i) {
    cloud.points.push_back({rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 0.0});
    cloud.normals.push_back({0.0, 0.0, 1.0});
  }
}

}  // namespace

ShapeKind shape_kind_from_string(const std::string& s) {
  if (s == "cube") return ShapeKind::cube;
  if (s == "tetrahedron") return ShapeKind::tetrahedron;
  if (s == "cylinder") return ShapeKind::cylinder;
  if (s == "sphere") return ShapeKind::sphere;
  if (s == "plane") return ShapeKind::plane;
  throw DataError("unknown shape kind '" + s + "'");
}

std::string to_string(ShapeKind k) {
  switch (k) {
    case ShapeKind::cube: return "cube";
    case ShapeKind::tetrahedron: return "tetrahedron";
    case ShapeKind::cylinder: return "cylinder";
    case ShapeKind::sphere: return "sphere";
    case ShapeKind::plane: return "plane";
  }
  return "?";
}

PointCloud generate_shape(ShapeKind kind, std::size_t n, std::uint64_t seed) {
  if (n < 100) throw DataError("generate_shape requires n >= 100");
  PointCloud cloud;
  cloud.points.reserve(n);
  cloud.normals.reserve(n);
  cloud.name = to_string(kind);
  Rng rng(hash_str(seed, to_string(kind).c_str()));
  switch (kind) {
    case ShapeKind::cube: sample_cube(cloud, n, rng); break;
    case ShapeKind::tetrahedron: sample_tetrahedron(cloud, n, rng); break;
    case ShapeKind::cylinder: sample_cylinder(cloud, n, rng); break;
    case ShapeKind::sphere: sample_sphere(cloud, n, rng); break;
    case ShapeKind::plane: sample_plane(cloud, n, rng); break;
  }
  return cloud;
}

PointCloud add_gaussian_noise(const PointCloud& cloud, const NoiseSpec& spec) {
  cloud.validate();
  if (spec.level < 0.0) throw DataError("noise level must be non-negative");
  PointCloud out = cloud;
  if (spec.level == 0.0) return out;
  const double sigma = spec.level * bbox_diagonal(cloud);
  Rng rng(hash_u64(spec.seed, 0x6e6f697365ull));  // "noise"
  for (Vec3& p : out.points) {
    p.x += sigma * rng.normal();
    p.y += sigma * rng.normal();
    p.z += sigma * rng.normal();
  }
  return out;
}

}  // namespace trinorm
