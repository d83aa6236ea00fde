#include "trinorm/inference.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "trinorm/common.hpp"
#include "trinorm/rng.hpp"
#include "trinorm/spatial_index.hpp"

namespace trinorm {
namespace {

std::uint64_t coord_seed(std::uint64_t base, const Vec3& p) {
  return hash_u64(hash_u64(base, std::bit_cast<std::uint64_t>(p.x)),
                  hash_u64(std::bit_cast<std::uint64_t>(p.y), std::bit_cast<std::uint64_t>(p.z)));
}

// Smallest-eigenvalue eigenvector of the kNN covariance, or nullopt when the
// neighborhood is collinear.
std::optional<Normal3> pca_normal_at(const SpatialIndex& index, const PointCloud& cloud,
                                     std::uint32_t i, std::size_t k) {
  const std::vector<std::uint32_t> ids = index.knn_query(cloud.points[i], k);
  std::vector<Vec3> pts;
  pts.reserve(ids.size());
  for (std::uint32_t id : ids) pts.push_back(cloud.points[id]);
  const SymEig3 eig = eig33_sym(covariance3(pts));
  if (eig.values[1] < 1e-12 && eig.values[2] < 1e-12) return std::nullopt;
  return eig.vectors[2];
}

}  // namespace

EstimateResult estimate_normals(const PointCloud& cloud, const EncoderNet& encoder,
                                const EstimatorNet& estimator, const PatchConfig& config,
                                std::size_t fallback_k) {
  cloud.validate();
  config.validate();
  const SpatialIndex index(cloud);
  const double radius = config.r_fraction * bbox_diagonal(cloud);
  const std::size_t n = cloud.size();
  const std::size_t pca_k = std::min(std::max<std::size_t>(3, fallback_k), n);

  EstimateResult out;
  out.normals.resize(n);
  out.fallback.assign(n, 0);

  const Vec3 centroid = [&] {
    Vec3 c{0, 0, 0};
    for (const Vec3& p : cloud.points) c = c + p;
    return c / static_cast<double>(n);
  }();

  parallel_for(n, [&](std::size_t i) {
    const std::uint32_t idx = static_cast<std::uint32_t>(i);
    Normal3 normal{0, 0, 1};
    bool ok = false;
    const std::optional<AlignedPatch> patch = preprocess_patch(
        index, cloud, idx, config, radius, coord_seed(config.seed, cloud.points[i]));
    if (patch) {
      try {
        EncoderCache ec;
        EstimatorCache sc;
        const std::vector<double> latent = encoder_forward(encoder, patch->points, ec);
        const Normal3 pred = estimator_forward(estimator, latent, sc);
        normal = normalized(patch->rotation.apply_transposed(pred));
        ok = true;
      } catch (const NumericError&) {
        ok = false;  // unstable output: fall back below
      }
    }
    if (!ok) {
      out.fallback[i] = 1;
      const std::optional<Normal3> pca = pca_normal_at(index, cloud, idx, pca_k);
      if (pca) {
        normal = *pca;
        if (dot(normal, cloud.points[i] - centroid) < 0.0) normal = -normal;
      }
    }
    out.normals[i] = normal;
  });

  for (std::uint8_t f : out.fallback) out.fallback_count += f;
  return out;
}

PcaBaselineResult pca_baseline_normals(const PointCloud& cloud, std::size_t k_neighbors) {
  cloud.validate();
  if (k_neighbors < 3) throw DataError("pca baseline needs k >= 3");
  if (k_neighbors > cloud.size()) throw DataError("pca baseline: k exceeds cloud size");
  const SpatialIndex index(cloud);
  const std::size_t n = cloud.size();

  Vec3 centroid{0, 0, 0};
  for (const Vec3& p : cloud.points) centroid = centroid + p;
  centroid = centroid / static_cast<double>(n);

  PcaBaselineResult out;
  out.normals.resize(n);
  out.degenerate.assign(n, 0);
  parallel_for(n, [&](std::size_t i) {
    const std::optional<Normal3> nrm =
        pca_normal_at(index, cloud, static_cast<std::uint32_t>(i), k_neighbors);
    if (!nrm) {
      out.degenerate[i] = 1;
      out.normals[i] = {0, 0, 1};
      return;
    }
    Normal3 v = *nrm;
    if (dot(v, cloud.points[i] - centroid) < 0.0) v = -v;
    out.normals[i] = v;
  });
  for (std::uint8_t f : out.degenerate) out.degenerate_count += f;
  return out;
}

double msae(std::span<const Normal3> pred, std::span<const Normal3> gt) {
  if (pred.size() != gt.size()) throw DataError("msae: length mismatch");
  if (pred.empty()) throw DataError("msae: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double c = std::clamp(std::abs(dot(pred[i], gt[i])), 0.0, 1.0);
    const double a = std::acos(c);
    sum += a * a;
  }
  return sum / static_cast<double>(pred.size());
}

std::vector<EvalReport> run_evaluation(std::span<const PointCloud> clean_shapes,
                                       std::span<const double> noise_levels,
                                       std::span<const std::string> methods,
                                       const EvalModels& models, const PatchConfig& patch_config,
                                       std::size_t pca_k, std::uint64_t seed,
                                       std::uint64_t config_hash) {
  for (const std::string& m : methods) {
    if (m == "ours") {
      if (models.encoder == nullptr || models.estimator == nullptr) {
        throw DataError("method 'ours' requires encoder and estimator models");
      }
    } else if (m == "ours-no-encoder") {
      if (models.ablation_encoder == nullptr || models.ablation_estimator == nullptr) {
        throw DataError("method 'ours-no-encoder' requires ablation models");
      }
    } else if (m != "pca-baseline") {
      throw DataError("unknown evaluation method '" + m + "'");
    }
  }

  std::vector<EvalReport> reports;
  for (const PointCloud& clean : clean_shapes) {
    if (!clean.has_normals()) {
      throw DataError("evaluation shape '" + clean.name + "' lacks ground-truth normals");
    }
    for (double level : noise_levels) {
      const PointCloud cloud = add_gaussian_noise(
          clean, {level, hash_u64(hash_str(seed, clean.name.c_str()),
                                  std::bit_cast<std::uint64_t>(level))});
      for (const std::string& method : methods) {
        EvalReport rep;
        rep.method = method;
        rep.shape = clean.name;
        rep.noise_level = level;
        rep.n_points = cloud.size();
        rep.config_hash = config_hash;
        const auto t0 = std::chrono::steady_clock::now();
        if (method == "pca-baseline") {
          const PcaBaselineResult res = pca_baseline_normals(cloud, pca_k);
          rep.msae_rad2 = msae(res.normals, cloud.normals);
          rep.degenerate_count = res.degenerate_count;
        } else {
          const bool ablation = method == "ours-no-encoder";
          const EncoderNet& enc = ablation ? *models.ablation_encoder : *models.encoder;
          const EstimatorNet& est = ablation ? *models.ablation_estimator : *models.estimator;
          PatchConfig pc = patch_config;
          pc.seed = hash_u64(seed, 0x6576616cull);  // "eval"
          const EstimateResult res = estimate_normals(cloud, enc, est, pc, pca_k);
          rep.msae_rad2 = msae(res.normals, cloud.normals);
          rep.degenerate_count = res.fallback_count;
        }
        rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        reports.push_back(std::move(rep));
      }
    }
  }
  return reports;
}

void write_report_csv(std::span<const EvalReport> reports, std::ostream& os) {
  os << "method,shape,noise_level,n_points,msae_rad2,seconds,degenerate_count\n";
  char buf[256];
  for (const EvalReport& r : reports) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%g,%zu,%.9g,%.3f,%zu\n", r.method.c_str(),
                  r.shape.c_str(), r.noise_level, r.n_points, r.msae_rad2, r.seconds,
                  r.degenerate_count);
    os << buf;
  }
}

void write_report_table(std::span<const EvalReport> reports, std::ostream& os) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-18s %-20s %8s %9s %12s %9s %6s\n", "method", "shape",
                "noise", "points", "msae[rad2]", "time[s]", "degen");
  os << buf;
  for (const EvalReport& r : reports) {
    std::snprintf(buf, sizeof(buf), "%-18s %-20s %8g %9zu %12.6f %9.2f %6zu\n", r.method.c_str(),
                  r.shape.c_str(), r.noise_level, r.n_points, r.msae_rad2, r.seconds,
                  r.degenerate_count);
    os << buf;
  }
}

}  // namespace trinorm
