#pragma once

// kd-tree over a point cloud. Immutable after construction; queries are
// read-only and safe to issue concurrently. Results match a brute-force scan
// exactly: ball_query uses the strict "< radius" predicate and returns
// ascending indices, knn_query breaks distance ties by lower index.

#include <cstdint>
#include <vector>

#include "trinorm/geometry.hpp"

namespace trinorm {

class SpatialIndex {
 public:
  explicit SpatialIndex(const PointCloud& cloud);

  std::size_t size() const { return idx_.size(); }

  // Indices i with ||p_i - center|| < radius, ascending.
  std::vector<std::uint32_t> ball_query(const Vec3& center, double radius) const;

  // The k nearest indices ordered by (distance, index). Throws DataError if
  // k is 0 or exceeds the cloud size.
  std::vector<std::uint32_t> knn_query(const Vec3& center, std::size_t k) const;

 private:
  struct Node {
    double split = 0.0;
    std::int32_t axis = -1;       // -1 marks a leaf
    std::uint32_t begin = 0, end = 0;
    std::int32_t left = -1, right = -1;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);

  std::vector<double> xs_, ys_, zs_;       // SoA copies in tree order
  std::vector<std::uint32_t> idx_;         // tree order -> original index
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

}  // namespace trinorm
