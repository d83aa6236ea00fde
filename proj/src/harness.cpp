#include "trinorm/harness.hpp"

#include <filesystem>
#include <fstream>

namespace trinorm {

Dataset build_run_dataset(const RunConfig& cfg) { return build_dataset(dataset_spec(cfg)); }

Dataset load_or_build_dataset(const RunConfig& cfg, const std::string& cache_dir) {
  namespace fs = std::filesystem;
  const fs::path dir(cache_dir);
  const std::string stamp_path = (dir / "cache.meta").string();
  const std::string train_trip = (dir / "train.tntrip").string();
  const std::string val_trip = (dir / "val.tntrip").string();
  const std::string train_patch = (dir / "train.tnpatch").string();
  const std::string val_patch = (dir / "val.tnpatch").string();
  const std::string stamp = std::to_string(config_hash(cfg));

  auto cache_valid = [&] {
    std::ifstream meta(stamp_path);
    std::string stored;
    if (!(meta >> stored) || stored != stamp) return false;
    return fs::exists(train_trip) && fs::exists(val_trip) && fs::exists(train_patch) &&
           fs::exists(val_patch);
  };

  if (cache_valid()) {
    Dataset ds;
    ds.train.triplets = load_triplet_corpus(train_trip);
    ds.val.triplets = load_triplet_corpus(val_trip);
    ds.train.patches = load_patch_corpus(train_patch);
    ds.val.patches = load_patch_corpus(val_patch);
    return ds;
  }

  Dataset ds = build_run_dataset(cfg);
  fs::create_directories(dir);
  save_triplet_corpus(ds.train.triplets, train_trip);
  save_triplet_corpus(ds.val.triplets, val_trip);
  save_patch_corpus(ds.train.patches, train_patch);
  save_patch_corpus(ds.val.patches, val_patch);
  std::ofstream meta(stamp_path);
  meta << stamp << '\n';
  if (!meta) throw IoError("cannot write cache stamp '" + stamp_path + "'");
  return ds;
}

PipelineResult train_pipeline(const RunConfig& cfg, const Dataset& dataset) {
  PipelineResult out;
  if (!cfg.train.ablation_no_encoder) {
    EncoderTrainResult enc = train_encoder(dataset.train.triplets, dataset.val.triplets, cfg.train);
    out.encoder = std::move(enc.net);
    out.encoder_history = std::move(enc.history);
    EstimatorTrainResult est =
        train_estimator(dataset.train.patches, dataset.val.patches, out.encoder, cfg.train);
    out.estimator = std::move(est.net);
    out.estimator_history = std::move(est.history);
  } else {
    EncoderNet unused = make_encoder(cfg.train.seed);
    EstimatorTrainResult est =
        train_estimator(dataset.train.patches, dataset.val.patches, unused, cfg.train);
    out.encoder = std::move(est.encoder);  // the jointly trained one
    out.estimator = std::move(est.net);
    out.estimator_history = std::move(est.history);
  }
  return out;
}

std::vector<PointCloud> validation_clouds(const RunConfig& cfg) {
  const DatasetSpec spec = dataset_spec(cfg);
  std::vector<PointCloud> clouds;
  for (const ShapeSpec& s : spec.val_shapes) {
    PointCloud c = generate_shape(s.kind, s.n_points, s.seed);
    c.name = s.name;
    clouds.push_back(std::move(c));
  }
  return clouds;
}

std::vector<ExponentAblationRow> ablate_exponent(const RunConfig& cfg,
                                                 const std::vector<int>& exponents) {
  if (exponents.empty()) throw DataError("exponent ablation needs at least one exponent");
  for (int e : exponents) {
    if (e <= 0 || e % 2 != 0) throw DataError("exponents must be positive even integers");
  }
  const Dataset dataset = build_run_dataset(cfg);
  EncoderTrainResult enc = train_encoder(dataset.train.triplets, dataset.val.triplets, cfg.train);
  const std::uint64_t enc_hash = weights_hash(enc.net.mlp);

  const std::vector<PointCloud> val = validation_clouds(cfg);
  const std::vector<double> eval_noise{0.005};
  const std::vector<std::string> methods{"ours"};

  std::vector<ExponentAblationRow> rows;
  for (int e : exponents) {
    RunConfig run = cfg;
    run.train.loss_exponent = e;
    EstimatorTrainResult est =
        train_estimator(dataset.train.patches, dataset.val.patches, enc.net, run.train);
    EvalModels models;
    models.encoder = &enc.net;
    models.estimator = &est.net;
    const std::vector<EvalReport> reports = run_evaluation(
        val, eval_noise, methods, models, run.patch, run.pca_k, run.seed, config_hash(run));
    double sum = 0.0;
    for (const EvalReport& r : reports) sum += r.msae_rad2;
    rows.push_back({e, sum / static_cast<double>(reports.size()), enc_hash});
  }
  return rows;
}

std::vector<std::pair<double, std::size_t>> default_sweep_sizes() {
  return {{0.01, 20}, {0.02, 50}, {0.03, 100}, {0.04, 250}, {0.05, 500}, {0.06, 500}};
}

std::vector<PatchSizeSweepEntry> patch_size_sweep(
    const RunConfig& cfg, const std::vector<std::pair<double, std::size_t>>& sizes) {
  if (sizes.empty()) throw DataError("patch-size sweep needs at least one size");
  std::vector<PatchSizeSweepEntry> out;
  const std::vector<std::string> methods{"ours"};
  for (const auto& [r_fraction, k] : sizes) {
    RunConfig run = cfg;
    run.patch.r_fraction = r_fraction;
    run.patch.k = k;
    const Dataset dataset = build_run_dataset(run);
    const PipelineResult pipe = train_pipeline(run, dataset);
    EvalModels models;
    models.encoder = &pipe.encoder;
    models.estimator = &pipe.estimator;
    const std::vector<PointCloud> val = validation_clouds(run);
    PatchSizeSweepEntry entry;
    entry.r_fraction = r_fraction;
    entry.k = k;
    entry.reports = run_evaluation(val, run.noise_levels, methods, models, run.patch, run.pca_k,
                                   run.seed, config_hash(run));
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace trinorm
