// trinorm command-line driver: shape generation, corruption, two-phase
// training, inference, evaluation and the two ablation harnesses.
//
// Exit codes: 0 success, 2 usage error, 3 data/I-O error, 4 numeric failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "trinorm/cloud_io.hpp"
#include "trinorm/harness.hpp"
#include "trinorm/kernels.hpp"

namespace tn = trinorm;

namespace {

struct GlobalArgs {
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::string profile = "toy";
  std::string config_path;
  unsigned threads = 0;  // 0 = hardware concurrency
  std::string kernel = "auto";
};

void add_global_options(CLI::App* cmd, GlobalArgs& g) {
  cmd->add_option("--seed", g.seed, "master seed; all randomness derives from it")
      ->each([&g](const std::string&) { g.seed_given = true; });
  cmd->add_option("--profile", g.profile, "configuration profile: toy or paper")
      ->check(CLI::IsMember({"toy", "paper"}));
  cmd->add_option("--config", g.config_path, "key = value config file (flags win)");
  cmd->add_option("--threads", g.threads, "worker threads (0 = all cores, 1 = serial)");
  cmd->add_option("--kernel", g.kernel, "kernel backend")
      ->check(CLI::IsMember({"auto", "scalar", "avx2"}));
}

void apply_globals(const GlobalArgs& g) {
  tn::set_thread_count(g.threads);
  if (g.kernel == "scalar") {
    tn::kernels::set_backend(tn::kernels::Backend::scalar);
  } else if (g.kernel == "avx2") {
    tn::kernels::set_backend(tn::kernels::Backend::avx2);
  }
}

tn::RunConfig load_run_config(const GlobalArgs& g) {
  tn::RunConfig cfg = tn::make_profile(g.profile, g.seed);
  if (!g.config_path.empty()) tn::apply_config_file(cfg, g.config_path);
  // flags win over the config file
  if (g.seed_given) tn::apply_config_line(cfg, "seed", std::to_string(g.seed));
  return cfg;
}

std::vector<double> parse_noise_list(const std::string& s) {
  std::vector<double> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  if (out.empty()) out.push_back(0.0);
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"trinorm: point cloud normal estimation via triplet feature learning"};
  app.require_subcommand(1);
  GlobalArgs g;

  // generate
  auto* gen = app.add_subcommand("generate", "sample a synthetic shape with exact normals");
  std::string gen_kind, gen_out, gen_format;
  std::size_t gen_n = 0;
  gen->add_option("--kind", gen_kind, "cube|tetrahedron|cylinder|sphere|plane")->required();
  gen->add_option("--n", gen_n, "number of surface samples (>= 100)")->required();
  gen->add_option("--out", gen_out, "output file (.xyz/.xyzn/.ply)")->required();
  gen->add_option("--format", gen_format, "override output format");
  add_global_options(gen, g);

  // corrupt
  auto* cor = app.add_subcommand("corrupt", "add Gaussian noise; ground truth passes through");
  std::string cor_in, cor_out;
  double cor_level = 0.0;
  cor->add_option("--in", cor_in, "input cloud")->required();
  cor->add_option("--out", cor_out, "output cloud")->required();
  cor->add_option("--level", cor_level, "sigma as a fraction of the bbox diagonal")->required();
  add_global_options(cor, g);

  // train-encoder
  auto* tenc = app.add_subcommand("train-encoder", "phase (a): triplet-train the feature encoder");
  std::string tenc_out, tenc_history, tenc_ckpt, tenc_cache;
  bool tenc_resume = false;
  tenc->add_option("--out", tenc_out, "output weights file")->required();
  tenc->add_option("--history", tenc_history, "write per-epoch loss CSV here");
  tenc->add_option("--checkpoint", tenc_ckpt, "checkpoint file updated after every epoch");
  tenc->add_flag("--resume", tenc_resume, "resume from --checkpoint if it exists");
  tenc->add_option("--cache-dir", tenc_cache, "reuse/populate corpus caches in this directory");
  add_global_options(tenc, g);

  // train-estimator
  auto* test_ = app.add_subcommand("train-estimator", "phase (b): train the normal estimator");
  std::string test_enc, test_out, test_out_enc, test_history, test_ckpt;
  bool test_resume = false, test_no_encoder = false;
  test_->add_option("--encoder", test_enc, "trained encoder weights (phase a output)");
  test_->add_option("--out", test_out, "output estimator weights file")->required();
  test_->add_option("--out-encoder", test_out_enc,
                    "output for the jointly trained encoder (ablation mode)");
  test_->add_option("--history", test_history, "write per-epoch loss CSV here");
  test_->add_option("--checkpoint", test_ckpt, "checkpoint file updated after every epoch");
  test_->add_flag("--resume", test_resume, "resume from --checkpoint if it exists");
  test_->add_flag("--no-encoder", test_no_encoder,
                  "ablation: train encoder+estimator jointly on the patch loss alone");
  std::string test_cache;
  test_->add_option("--cache-dir", test_cache, "reuse/populate corpus caches in this directory");
  add_global_options(test_, g);

  // estimate
  auto* est = app.add_subcommand("estimate", "predict normals for a point cloud");
  std::string est_in, est_enc, est_est, est_out;
  est->add_option("--in", est_in, "input cloud")->required();
  est->add_option("--model-encoder", est_enc, "encoder weights")->required();
  est->add_option("--model-estimator", est_est, "estimator weights")->required();
  est->add_option("--out", est_out, "output .xyzn cloud")->required();
  add_global_options(est, g);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "MSAE evaluation harness (CSV on stdout)");
  std::string ev_shapes, ev_methods = "pca-baseline", ev_noise = "0";
  std::string ev_enc, ev_est, ev_abl_enc, ev_abl_est, ev_csv;
  bool ev_table = false;
  ev->add_option("--shapes", ev_shapes, "comma-separated cloud files with ground truth")->required();
  ev->add_option("--methods", ev_methods, "comma list of: ours, ours-no-encoder, pca-baseline");
  ev->add_option("--noise", ev_noise, "comma list of noise levels");
  ev->add_option("--model-encoder", ev_enc, "encoder weights for 'ours'");
  ev->add_option("--model-estimator", ev_est, "estimator weights for 'ours'");
  ev->add_option("--ablation-encoder", ev_abl_enc, "encoder weights for 'ours-no-encoder'");
  ev->add_option("--ablation-estimator", ev_abl_est, "estimator weights for 'ours-no-encoder'");
  ev->add_option("--csv", ev_csv, "also write the CSV to this file");
  ev->add_flag("--table", ev_table, "print an aligned table after the CSV");
  add_global_options(ev, g);

  // ablate-exponent
  auto* abe = app.add_subcommand("ablate-exponent", "sweep the cosine-loss exponent");
  std::string abe_exponents = "2,4,6,8,10", abe_out;
  abe->add_option("--exponents", abe_exponents, "comma list of even exponents");
  abe->add_option("--out", abe_out, "CSV output file (default stdout)");
  add_global_options(abe, g);

  // ablate-patch-size
  auto* abp = app.add_subcommand("ablate-patch-size", "sweep (radius fraction, points per patch)");
  std::string abp_sizes = "0.01:20,0.02:50,0.03:100,0.04:250,0.05:500,0.06:500", abp_out;
  abp->add_option("--sizes", abp_sizes, "comma list of r_fraction:k pairs");
  abp->add_option("--out", abp_out, "CSV output file (default stdout)");
  add_global_options(abp, g);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  apply_globals(g);

  if (gen->parsed()) {
    const tn::ShapeKind kind = tn::shape_kind_from_string(gen_kind);
    const tn::PointCloud cloud = tn::generate_shape(kind, gen_n, g.seed);
    const tn::CloudFormat fmt = gen_format.empty() ? tn::cloud_format_from_path(gen_out)
                                                   : tn::cloud_format_from_string(gen_format);
    tn::save_cloud(cloud, gen_out, fmt);
    std::fprintf(stderr, "wrote %zu points to %s\n", cloud.size(), gen_out.c_str());
    return 0;
  }

  if (cor->parsed()) {
    const tn::PointCloud in_cloud = tn::load_cloud(cor_in, tn::cloud_format_from_path(cor_in));
    const tn::PointCloud out_cloud = tn::add_gaussian_noise(in_cloud, {cor_level, g.seed});
    tn::save_cloud(out_cloud, cor_out, tn::cloud_format_from_path(cor_out));
    std::fprintf(stderr, "wrote %zu points to %s\n", out_cloud.size(), cor_out.c_str());
    return 0;
  }

  if (tenc->parsed()) {
    const tn::RunConfig cfg = load_run_config(g);
    std::fprintf(stderr, "building dataset (profile %s, seed %llu)...\n", cfg.profile.c_str(),
                 static_cast<unsigned long long>(cfg.seed));
    const tn::Dataset dataset = tenc_cache.empty() ? tn::build_run_dataset(cfg)
                                                   : tn::load_or_build_dataset(cfg, tenc_cache);
    for (const std::string& w : dataset.train.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    std::fprintf(stderr, "train triplets: %zu, val triplets: %zu\n", dataset.train.triplets.size(),
                 dataset.val.triplets.size());
    tn::EncoderTrainer trainer(dataset.train.triplets, dataset.val.triplets, cfg.train);
    if (tenc_resume && !tenc_ckpt.empty() && std::filesystem::exists(tenc_ckpt)) {
      trainer.resume_checkpoint(tenc_ckpt);
      std::fprintf(stderr, "resumed at epoch %zu\n", trainer.next_epoch());
    }
    while (!trainer.done()) {
      trainer.run_epoch();
      const tn::EpochStats& e = trainer.history().back();
      std::fprintf(stderr, "epoch %zu: train %.6f val %.6f lr %g\n", e.epoch, e.train_loss,
                   e.val_loss, e.lr);
      if (!tenc_ckpt.empty()) trainer.save_checkpoint(tenc_ckpt);
    }
    if (trainer.skipped_steps() > 0) {
      std::fprintf(stderr, "warning: %zu steps skipped on non-finite gradients\n",
                   trainer.skipped_steps());
    }
    tn::save_encoder(trainer.net(), tenc_out);
    if (!tenc_history.empty()) tn::write_history_csv(trainer.history(), tenc_history);
    std::fprintf(stderr, "encoder saved to %s\n", tenc_out.c_str());
    return 0;
  }

  if (test_->parsed()) {
    tn::RunConfig cfg = load_run_config(g);
    cfg.train.ablation_no_encoder = test_no_encoder;
    if (!test_no_encoder && test_enc.empty()) {
      std::fprintf(stderr, "error: --encoder is required unless --no-encoder is given\n");
      return 2;
    }
    if (test_no_encoder && test_out_enc.empty()) {
      std::fprintf(stderr, "error: --out-encoder is required with --no-encoder\n");
      return 2;
    }
    tn::EncoderNet encoder = test_no_encoder ? tn::make_encoder(cfg.seed) : tn::load_encoder(test_enc);
    std::fprintf(stderr, "building dataset (profile %s, seed %llu)...\n", cfg.profile.c_str(),
                 static_cast<unsigned long long>(cfg.seed));
    const tn::Dataset dataset = test_cache.empty() ? tn::build_run_dataset(cfg)
                                                   : tn::load_or_build_dataset(cfg, test_cache);
    tn::EstimatorTrainer trainer(dataset.train.patches, dataset.val.patches, encoder, cfg.train);
    if (test_resume && !test_ckpt.empty() && std::filesystem::exists(test_ckpt)) {
      trainer.resume_checkpoint(test_ckpt);
      std::fprintf(stderr, "resumed at epoch %zu\n", trainer.next_epoch());
    }
    while (!trainer.done()) {
      trainer.run_epoch();
      const tn::EpochStats& e = trainer.history().back();
      std::fprintf(stderr, "epoch %zu: train %.6f val %.6f lr %g\n", e.epoch, e.train_loss,
                   e.val_loss, e.lr);
      if (!test_ckpt.empty()) trainer.save_checkpoint(test_ckpt);
    }
    if (trainer.skipped_steps() > 0) {
      std::fprintf(stderr, "warning: %zu steps skipped on non-finite gradients\n",
                   trainer.skipped_steps());
    }
    tn::save_estimator(trainer.net(), test_out);
    if (test_no_encoder) tn::save_encoder(trainer.encoder(), test_out_enc);
    if (!test_history.empty()) tn::write_history_csv(trainer.history(), test_history);
    std::fprintf(stderr, "estimator saved to %s\n", test_out.c_str());
    return 0;
  }

  if (est->parsed()) {
    const tn::RunConfig cfg = load_run_config(g);
    const tn::PointCloud cloud = tn::load_cloud(est_in, tn::cloud_format_from_path(est_in));
    const tn::EncoderNet encoder = tn::load_encoder(est_enc);
    const tn::EstimatorNet estimator = tn::load_estimator(est_est);
    tn::PatchConfig pc = cfg.patch;
    pc.seed = cfg.seed;
    const tn::EstimateResult res = tn::estimate_normals(cloud, encoder, estimator, pc, cfg.pca_k);
    tn::PointCloud out_cloud = cloud;
    out_cloud.normals = res.normals;
    tn::save_cloud(out_cloud, est_out, tn::CloudFormat::xyzn);
    std::fprintf(stderr, "estimated %zu normals (%zu PCA fallbacks), wrote %s\n",
                 res.normals.size(), res.fallback_count, est_out.c_str());
    return 0;
  }

  if (ev->parsed()) {
    const tn::RunConfig cfg = load_run_config(g);
    std::vector<std::string> methods;
    {
      std::istringstream ss(ev_methods);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) methods.push_back(item);
      }
    }
    std::vector<tn::PointCloud> shapes;
    {
      std::istringstream ss(ev_shapes);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) shapes.push_back(tn::load_cloud(item, tn::cloud_format_from_path(item)));
      }
    }
    const std::vector<double> noise = parse_noise_list(ev_noise);

    std::optional<tn::EncoderNet> enc, abl_enc;
    std::optional<tn::EstimatorNet> estm, abl_est;
    tn::EvalModels models;
    for (const std::string& m : methods) {
      if (m == "ours") {
        if (ev_enc.empty() || ev_est.empty()) {
          throw tn::DataError("method 'ours' requires --model-encoder and --model-estimator");
        }
        enc = tn::load_encoder(ev_enc);
        estm = tn::load_estimator(ev_est);
        models.encoder = &*enc;
        models.estimator = &*estm;
      } else if (m == "ours-no-encoder") {
        if (ev_abl_enc.empty() || ev_abl_est.empty()) {
          throw tn::DataError("method 'ours-no-encoder' requires --ablation-encoder and --ablation-estimator");
        }
        abl_enc = tn::load_encoder(ev_abl_enc);
        abl_est = tn::load_estimator(ev_abl_est);
        models.ablation_encoder = &*abl_enc;
        models.ablation_estimator = &*abl_est;
      }
    }
    const std::vector<tn::EvalReport> reports = tn::run_evaluation(
        shapes, noise, methods, models, cfg.patch, cfg.pca_k, cfg.seed, tn::config_hash(cfg));
    tn::write_report_csv(reports, std::cout);
    if (!ev_csv.empty()) {
      std::ofstream f(ev_csv);
      if (!f) throw tn::IoError("cannot open '" + ev_csv + "' for writing");
      tn::write_report_csv(reports, f);
    }
    if (ev_table) tn::write_report_table(reports, std::cout);
    return 0;
  }

  if (abe->parsed()) {
    const tn::RunConfig cfg = load_run_config(g);
    std::vector<int> exponents;
    {
      std::istringstream ss(abe_exponents);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) exponents.push_back(std::stoi(item));
      }
    }
    const std::vector<tn::ExponentAblationRow> rows = tn::ablate_exponent(cfg, exponents);
    std::ostringstream csv;
    csv << "exponent,msae_rad2,encoder_hash\n";
    for (const auto& r : rows) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "%d,%.9g,%016llx\n", r.exponent, r.msae_rad2,
                    static_cast<unsigned long long>(r.encoder_hash));
      csv << buf;
    }
    if (abe_out.empty()) {
      std::cout << csv.str();
    } else {
      std::ofstream f(abe_out);
      if (!f) throw tn::IoError("cannot open '" + abe_out + "' for writing");
      f << csv.str();
    }
    return 0;
  }

  if (abp->parsed()) {
    const tn::RunConfig cfg = load_run_config(g);
    std::vector<std::pair<double, std::size_t>> sizes;
    {
      std::istringstream ss(abp_sizes);
      std::string item;
      while (std::getline(ss, item, ',')) {
        const std::size_t colon = item.find(':');
        if (colon == std::string::npos) throw tn::DataError("size entries must be r_fraction:k");
        sizes.emplace_back(std::stod(item.substr(0, colon)),
                           static_cast<std::size_t>(std::stoull(item.substr(colon + 1))));
      }
    }
    const std::vector<tn::PatchSizeSweepEntry> entries = tn::patch_size_sweep(cfg, sizes);
    std::ostringstream csv;
    csv << "r_fraction,k,method,shape,noise_level,n_points,msae_rad2,seconds,degenerate_count\n";
    for (const auto& e : entries) {
      for (const auto& r : e.reports) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%g,%zu,%s,%s,%g,%zu,%.9g,%.3f,%zu\n", e.r_fraction, e.k,
                      r.method.c_str(), r.shape.c_str(), r.noise_level, r.n_points, r.msae_rad2,
                      r.seconds, r.degenerate_count);
        csv << buf;
      }
    }
    if (abp_out.empty()) {
      std::cout << csv.str();
    } else {
      std::ofstream f(abp_out);
      if (!f) throw tn::IoError("cannot open '" + abp_out + "' for writing");
      f << csv.str();
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const tn::NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 4;
  } catch (const tn::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const tn::DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
