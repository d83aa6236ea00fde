#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "trinorm/inference.hpp"
#include "trinorm/rng.hpp"
#include "trinorm/spatial_index.hpp"

using namespace trinorm;

TEST_CASE("msae: exact values and symmetries") {
  const std::vector<Normal3> a{{0, 0, 1}, {1, 0, 0}};
  CHECK(msae(a, a) == 0.0);
  const std::vector<Normal3> flipped{{0, 0, -1}, {-1, 0, 0}};
  CHECK(msae(a, flipped) == 0.0);
  const std::vector<Normal3> ortho{{1, 0, 0}, {0, 0, 1}};
  const double quarter = M_PI / 2.0;
  CHECK(msae(a, ortho) == doctest::Approx(quarter * quarter).epsilon(1e-12));
  CHECK(msae(a, ortho) == doctest::Approx(2.4674011).epsilon(1e-6));
  CHECK_THROWS_AS(msae(a, std::vector<Normal3>{{0, 0, 1}}), DataError);

  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Normal3> p, g;
    for (int i = 0; i < 5; ++i) {
      Vec3 u{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
      Vec3 v{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
      p.push_back(normalized(u));
      g.push_back(normalized(v));
    }
    const double m = msae(p, g);
    CHECK(m >= 0.0);
    CHECK(m <= (M_PI / 2) * (M_PI / 2) + 1e-12);
    CHECK(msae(g, p) == m);  // symmetric
    std::vector<Normal3> p_flip = p;
    for (auto& n : p_flip) n = -n;
    CHECK(msae(p_flip, g) == m);
  }
}

TEST_CASE("pca baseline: exact +-z on an analytic plane") {
  const PointCloud plane = generate_shape(ShapeKind::plane, 3000, 7);
  const PcaBaselineResult res = pca_baseline_normals(plane, 20);
  CHECK(res.degenerate_count == 0);
  for (const Normal3& n : res.normals) {
    CHECK(n.x == 0.0);
    CHECK(n.y == 0.0);
    CHECK(std::abs(n.z) == 1.0);
  }
}

TEST_CASE("pca baseline: sphere accuracy") {
  const PointCloud sphere = generate_shape(ShapeKind::sphere, 10000, 11);
  const PcaBaselineResult res = pca_baseline_normals(sphere, 20);
  const double err = msae(res.normals, sphere.normals);
  CHECK(err < 1e-3);
  // angle below 2 degrees for at least 99% of points
  std::size_t good = 0;
  for (std::size_t i = 0; i < res.normals.size(); ++i) {
    const double c = std::clamp(std::abs(dot(res.normals[i], sphere.normals[i])), 0.0, 1.0);
    if (std::acos(c) * 180.0 / M_PI < 2.0) ++good;
  }
  CHECK(good >= res.normals.size() * 99 / 100);
}

TEST_CASE("pca baseline: collinear neighborhood flags the fallback") {
  PointCloud line;
  line.name = "line";
  for (int i = 0; i < 10; ++i) line.points.push_back({0.1 * i, 0.0, 0.0});
  const PcaBaselineResult res = pca_baseline_normals(line, 3);
  CHECK(res.degenerate_count == 10);
  for (const Normal3& n : res.normals) {
    CHECK(n.z == 1.0);
  }
  CHECK_THROWS_AS(pca_baseline_normals(line, 2), DataError);
  CHECK_THROWS_AS(pca_baseline_normals(line, 999), DataError);
}

TEST_CASE("inverse-rotation recovery round trips") {
  Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    Vec3 a = normalized({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    Vec3 helper{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    Vec3 b = normalized(cross(a, helper));
    Vec3 c = cross(a, b);
    RotationMatrix r;
    r.m = {a.x, a.y, a.z, b.x, b.y, b.z, c.x, c.y, c.z};
    const Vec3 v = normalized({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    const Vec3 back = r.apply_transposed(r.apply(v));
    CHECK(norm(back - v) < 1e-9);
  }
}

TEST_CASE("estimate_normals: unit outputs, count, permutation equivariance") {
  const PointCloud cube = generate_shape(ShapeKind::cube, 3000, 17);
  const EncoderNet encoder = make_encoder(1);
  const EstimatorNet estimator = make_estimator(2);
  PatchConfig pc;
  pc.k = 16;
  pc.r_fraction = 0.05;
  pc.seed = 3;
  const EstimateResult res = estimate_normals(cube, encoder, estimator, pc);
  REQUIRE(res.normals.size() == cube.size());
  for (const Normal3& n : res.normals) CHECK(is_unit(n, 1e-6));

  // permute the cloud: outputs permute identically
  Rng rng(19);
  std::vector<std::uint32_t> perm(cube.size());
  std::iota(perm.begin(), perm.end(), 0u);
  rng.shuffle(perm);
  PointCloud shuffled;
  shuffled.name = cube.name;
  for (std::uint32_t p : perm) {
    shuffled.points.push_back(cube.points[p]);
    shuffled.normals.push_back(cube.normals[p]);
  }
  const EstimateResult res2 = estimate_normals(shuffled, encoder, estimator, pc);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    CHECK(res2.normals[i].x == res.normals[perm[i]].x);
    CHECK(res2.normals[i].y == res.normals[perm[i]].y);
    CHECK(res2.normals[i].z == res.normals[perm[i]].z);
  }
}

TEST_CASE("estimate_normals falls back to PCA on degenerate patches") {
  // tight cluster plus isolated outliers: outlier patches have < 3 points
  PointCloud cloud;
  cloud.name = "sparse";
  Rng rng(23);
  for (int i = 0; i < 500; ++i) {
    cloud.points.push_back({rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), 0.0});
  }
  cloud.points.push_back({5, 5, 5});
  cloud.points.push_back({-5, -5, 5});
  const EncoderNet encoder = make_encoder(1);
  const EstimatorNet estimator = make_estimator(2);
  PatchConfig pc;
  pc.k = 8;
  pc.r_fraction = 0.01;
  const EstimateResult res = estimate_normals(cloud, encoder, estimator, pc);
  CHECK(res.fallback_count >= 2);
  CHECK(res.fallback[cloud.size() - 1] == 1);
  for (const Normal3& n : res.normals) CHECK(is_unit(n, 1e-6));
}

TEST_CASE("run_evaluation: row cardinality, csv shape, pca needs no models") {
  std::vector<PointCloud> shapes;
  shapes.push_back(generate_shape(ShapeKind::cube, 1200, 29));
  shapes.push_back(generate_shape(ShapeKind::sphere, 1200, 31));
  const std::vector<double> noise{0.0, 0.005};
  const std::vector<std::string> methods{"pca-baseline"};
  EvalModels models;
  const std::vector<EvalReport> reports =
      run_evaluation(shapes, noise, methods, models, PatchConfig{}, 20, 1, 0xabc);
  CHECK(reports.size() == 2 * 2 * 1);
  for (const EvalReport& r : reports) {
    CHECK(r.method == "pca-baseline");
    CHECK(r.n_points == 1200);
    CHECK(r.config_hash == 0xabc);
    CHECK(std::isfinite(r.msae_rad2));
  }
  std::ostringstream csv;
  write_report_csv(reports, csv);
  std::istringstream lines(csv.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header == "method,shape,noise_level,n_points,msae_rad2,seconds,degenerate_count");
  std::size_t rows = 0;
  std::string line;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == reports.size());

  std::ostringstream table;
  write_report_table(reports, table);
  CHECK(table.str().find("pca-baseline") != std::string::npos);

  // learned methods require their models
  const std::vector<std::string> ours{"ours"};
  CHECK_THROWS_AS(run_evaluation(shapes, noise, ours, models, PatchConfig{}, 20, 1, 0),
                  DataError);
  const std::vector<std::string> unknown{"magic"};
  CHECK_THROWS_AS(run_evaluation(shapes, noise, unknown, models, PatchConfig{}, 20, 1, 0),
                  DataError);
}

TEST_CASE("noisier input does not get a better pca score on the cube") {
  std::vector<PointCloud> shapes;
  shapes.push_back(generate_shape(ShapeKind::cube, 4000, 37));
  const std::vector<double> noise{0.0, 0.01};
  const std::vector<std::string> methods{"pca-baseline"};
  EvalModels models;
  const auto reports = run_evaluation(shapes, noise, methods, models, PatchConfig{}, 20, 1, 0);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].msae_rad2 < reports[1].msae_rad2);
}
