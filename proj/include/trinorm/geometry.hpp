#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "trinorm/common.hpp"

namespace trinorm {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
};

using Point3 = Vec3;
using Normal3 = Vec3;

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm2(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(norm2(a)); }
inline Vec3 normalized(const Vec3& a) { return a / norm(a); }
inline bool finite(const Vec3& a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}
inline bool is_unit(const Vec3& a, double tol = 1e-6) {
  return std::abs(norm(a) - 1.0) <= tol;
}

// Ordered point list with optional per-point unit ground-truth normals.
struct PointCloud {
  std::vector<Point3> points;
  std::vector<Normal3> normals;  // empty, or same length as points
  std::string name;

  bool has_normals() const { return !normals.empty(); }
  std::size_t size() const { return points.size(); }

  void validate() const {
    if (points.empty()) throw DataError("point cloud '" + name + "' is empty");
    if (!normals.empty() && normals.size() != points.size()) {
      throw DataError("point cloud '" + name + "': normal count does not match point count");
    }
  }
};

// Euclidean length of the axis-aligned bounding-box diagonal.
double bbox_diagonal(const PointCloud& cloud);

}  // namespace trinorm
