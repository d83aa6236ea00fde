// kd-tree queries against the O(n^2) brute-force oracle.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <vector>

#include "trinorm/rng.hpp"
#include "trinorm/spatial_index.hpp"

using namespace trinorm;

namespace {

PointCloud random_cloud(std::size_t n, Rng& rng, double extent = 1.0) {
  PointCloud cloud;
  cloud.name = "random";
  for (std::size_t i = 0; i < n; ++i) {
    cloud.points.push_back(
        {rng.uniform(-extent, extent), rng.uniform(-extent, extent), rng.uniform(-extent, extent)});
  }
  return cloud;
}

std::vector<std::uint32_t> brute_ball(const PointCloud& c, const Vec3& center, double r) {
  std::vector<std::uint32_t> out;
  const double r2 = r * r;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double dx = c.points[i].x - center.x;
    const double dy = c.points[i].y - center.y;
    const double dz = c.points[i].z - center.z;
    if ((dx * dx + dy * dy) + dz * dz < r2) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

std::vector<std::uint32_t> brute_knn(const PointCloud& c, const Vec3& center, std::size_t k) {
  std::vector<std::pair<double, std::uint32_t>> all;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double dx = c.points[i].x - center.x;
    const double dy = c.points[i].y - center.y;
    const double dz = c.points[i].z - center.z;
    all.emplace_back((dx * dx + dy * dy) + dz * dz, static_cast<std::uint32_t>(i));
  }
  std::sort(all.begin(), all.end());
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(all[i].second);
  return out;
}

}  // namespace

TEST_CASE("single-point cloud") {
  PointCloud c;
  c.points = {{1, 2, 3}};
  const SpatialIndex idx(c);
  CHECK(idx.ball_query({1, 2, 3}, 0.5) == std::vector<std::uint32_t>{0});
  CHECK(idx.knn_query({0, 0, 0}, 1) == std::vector<std::uint32_t>{0});
}

TEST_CASE("unit sphere points, small ball around origin is empty") {
  Rng rng(3);
  PointCloud c;
  for (int i = 0; i < 50; ++i) {
    Vec3 v{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    c.points.push_back(normalized(v));
  }
  const SpatialIndex idx(c);
  CHECK(idx.ball_query({0, 0, 0}, 0.5).empty());
}

TEST_CASE("ball and knn queries match brute force on 100 random clouds") {
  Rng rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(1000);
    const PointCloud cloud = random_cloud(n, rng);
    const SpatialIndex index(cloud);
    for (int q = 0; q < 5; ++q) {
      const Vec3 center = q % 2 == 0
                              ? cloud.points[rng.below(n)]
                              : Vec3{rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2)};
      const double r = rng.uniform(0.01, 1.0);
      CHECK(index.ball_query(center, r) == brute_ball(cloud, center, r));
      const std::size_t k = 1 + rng.below(n);
      CHECK(index.knn_query(center, k) == brute_knn(cloud, center, k));
    }
  }
}

TEST_CASE("duplicate points are all returned, knn ties break by lower index") {
  PointCloud c;
  c.points = {{0, 0, 0}, {1, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  const SpatialIndex idx(c);
  CHECK(idx.ball_query({1, 0, 0}, 0.5) == std::vector<std::uint32_t>{1, 2});
  CHECK(idx.knn_query({1, 0, 0}, 2) == std::vector<std::uint32_t>{1, 2});
  // equidistant tie between index 0 and 3 resolves to 0
  CHECK(idx.knn_query({1, 0, 0}, 3) == std::vector<std::uint32_t>{1, 2, 0});
}

TEST_CASE("knn edge cases") {
  Rng rng(5);
  const PointCloud cloud = random_cloud(64, rng);
  const SpatialIndex idx(cloud);
  // k == cloud size returns everything
  auto all = idx.knn_query({0, 0, 0}, 64);
  CHECK(all.size() == 64);
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 64; ++i) CHECK(all[i] == i);
  // k == 1 centered on a cloud point returns that point
  CHECK(idx.knn_query(cloud.points[17], 1) == std::vector<std::uint32_t>{17});
  CHECK_THROWS_AS(idx.knn_query({0, 0, 0}, 0), DataError);
  CHECK_THROWS_AS(idx.knn_query({0, 0, 0}, 65), DataError);
  CHECK_THROWS_AS(idx.ball_query({0, 0, 0}, 0.0), DataError);
}
