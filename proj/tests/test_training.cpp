// Training loops at micro scale: loss descent, determinism (including across
// thread counts), the frozen-encoder contract, checkpoint resume bit-exactness.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "trinorm/common.hpp"
#include "trinorm/harness.hpp"
#include "trinorm/losses.hpp"
#include "trinorm/rng.hpp"

using namespace trinorm;

namespace {

// Patches drawn from one of two far-apart planar configurations; triplets are
// trivially separable (anchor/positive same plane, negative perpendicular).
Mat plane_patch(bool xy_plane, Rng& rng, std::size_t k = 16) {
  Mat m(k, 3);
  for (std::size_t r = 0; r < k; ++r) {
    const double u = rng.uniform(-0.8, 0.8);
    const double v = rng.uniform(-0.8, 0.8);
    if (xy_plane) {
      m(r, 0) = u;
      m(r, 1) = v;
      m(r, 2) = rng.uniform(-0.02, 0.02);
    } else {
      m(r, 0) = rng.uniform(-0.02, 0.02);
      m(r, 1) = v;
      m(r, 2) = u;
    }
  }
  return m;
}

std::vector<Triplet> separable_triplets(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Triplet> out;
  for (std::size_t i = 0; i < count; ++i) {
    Triplet t;
    t.anchor.points = plane_patch(true, rng);
    t.positive.points = plane_patch(true, rng);
    t.negative.points = plane_patch(false, rng);
    t.anchor.source_name = "toy";
    t.positive.source_name = "toy";
    t.negative.source_name = "toy";
    t.anchor_gt_normal = {0, 0, 1};
    out.push_back(std::move(t));
  }
  return out;
}

double mean_triplet_loss(const EncoderNet& net, std::span<const Triplet> set, double margin) {
  double sum = 0.0;
  for (const Triplet& t : set) {
    EncoderCache ca, cs, ct;
    const auto fp = encoder_forward(net, t.anchor.points, ca);
    const auto fs = encoder_forward(net, t.positive.points, cs);
    const auto ft = encoder_forward(net, t.negative.points, ct);
    sum += triplet_loss(fp, fs, ft, {margin}).loss;
  }
  return sum / static_cast<double>(set.size());
}

TrainConfig micro_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.encoder_epochs = 5;
  cfg.estimator_epochs = 6;
  cfg.batch_size = 16;
  cfg.seed = seed;
  return cfg;
}

struct MicroData {
  Dataset ds;
};

const Dataset& micro_dataset() {
  static const Dataset ds = [] {
    DatasetSpec spec;
    spec.train_shapes = {{ShapeKind::cube, 2000, 101, "cube-0"}};
    spec.val_shapes = {{ShapeKind::cube, 2000, 102, "cube-val-0"}};
    spec.noise_levels = {0.0, 0.005};
    spec.patches_per_shape = 120;
    spec.val_patches_per_shape = 40;
    spec.patch.k = 16;
    spec.patch.r_fraction = 0.05;
    spec.seed = 5;
    return build_dataset(spec);
  }();
  return ds;
}

}  // namespace

TEST_CASE("separable toy set: encoder loss falls below 10% of initial within 5 epochs") {
  const std::vector<Triplet> train = separable_triplets(96, 1);
  const std::vector<Triplet> val = separable_triplets(24, 2);
  TrainConfig cfg = micro_config(7);
  const EncoderNet fresh = make_encoder(hash_u64(cfg.seed, 0x656e63ull));
  const double initial = mean_triplet_loss(fresh, train, cfg.margin);
  REQUIRE(initial > 0.0);
  const EncoderTrainResult res = train_encoder(train, val, cfg);
  CHECK(res.history.size() == 5);
  CHECK(res.history.back().train_loss < 0.1 * initial);
}

TEST_CASE("a batch of identical triplets reports the single-triplet loss") {
  std::vector<Triplet> train = separable_triplets(1, 3);
  for (int i = 0; i < 15; ++i) train.push_back(train[0]);
  TrainConfig cfg = micro_config(9);
  cfg.encoder_epochs = 1;
  cfg.batch_size = 16;
  const EncoderNet fresh = make_encoder(hash_u64(cfg.seed, 0x656e63ull));
  const double single = mean_triplet_loss(fresh, std::span(train.data(), 1), cfg.margin);
  const EncoderTrainResult res = train_encoder(train, {}, cfg);
  CHECK(res.history.front().train_loss == doctest::Approx(single).epsilon(1e-12));
}

TEST_CASE("fixed seed gives a bit-identical loss history and weights") {
  const std::vector<Triplet> train = separable_triplets(48, 11);
  TrainConfig cfg = micro_config(13);
  cfg.encoder_epochs = 3;
  const EncoderTrainResult a = train_encoder(train, {}, cfg);
  const EncoderTrainResult b = train_encoder(train, {}, cfg);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].train_loss == b.history[i].train_loss);
  }
  CHECK(weights_hash(a.net.mlp) == weights_hash(b.net.mlp));
}

TEST_CASE("thread count does not change training results") {
  const std::vector<Triplet> train = separable_triplets(48, 17);
  TrainConfig cfg = micro_config(19);
  cfg.encoder_epochs = 2;
  set_thread_count(1);
  const EncoderTrainResult serial = train_encoder(train, {}, cfg);
  set_thread_count(4);
  const EncoderTrainResult threaded = train_encoder(train, {}, cfg);
  set_thread_count(1);
  CHECK(weights_hash(serial.net.mlp) == weights_hash(threaded.net.mlp));
  for (std::size_t i = 0; i < serial.history.size(); ++i) {
    CHECK(serial.history[i].train_loss == threaded.history[i].train_loss);
  }
}

TEST_CASE("estimator phase: frozen encoder is bit-identical before and after") {
  const Dataset& ds = micro_dataset();
  REQUIRE(!ds.train.patches.empty());
  TrainConfig cfg = micro_config(23);
  const EncoderNet encoder = make_encoder(301);
  const std::uint64_t before = weights_hash(encoder.mlp);
  const EstimatorTrainResult res =
      train_estimator(ds.train.patches, ds.val.patches, encoder, cfg);
  CHECK(weights_hash(encoder.mlp) == before);
  CHECK(weights_hash(res.encoder.mlp) == before);
  CHECK(res.history.size() == cfg.estimator_epochs);
  for (const EpochStats& e : res.history) {
    CHECK(std::isfinite(e.train_loss));
    CHECK(std::isfinite(e.val_loss));
  }

  // validation loss beats a randomly initialized estimator
  auto val_loss_of = [&](const EstimatorNet& net) {
    double sum = 0.0;
    for (const LabeledPatch& lp : ds.val.patches) {
      EncoderCache ec;
      EstimatorCache sc;
      const std::vector<double> latent = encoder_forward(encoder, lp.patch.points, ec);
      const Normal3 pred = estimator_forward(net, latent, sc);
      sum += normal_loss_exponent(pred, lp.gt_normals, lp.center_gt, {cfg.sigma_s_deg},
                                  cfg.loss_exponent)
                 .loss;
    }
    return sum / static_cast<double>(ds.val.patches.size());
  };
  const EstimatorNet fresh = make_estimator(hash_u64(cfg.seed, 0x657374ull));
  CHECK(res.history.back().val_loss < val_loss_of(fresh));
  CHECK(val_loss_of(res.net) == doctest::Approx(res.history.back().val_loss).epsilon(1e-12));
}

TEST_CASE("ablation mode trains the encoder jointly from scratch") {
  const Dataset& ds = micro_dataset();
  TrainConfig cfg = micro_config(29);
  cfg.estimator_epochs = 2;
  cfg.ablation_no_encoder = true;
  const EncoderNet ignored = make_encoder(999);
  const EstimatorTrainResult res =
      train_estimator(ds.train.patches, ds.val.patches, ignored, cfg);
  // the result encoder is neither the input nor the fresh ablation init
  CHECK(weights_hash(res.encoder.mlp) != weights_hash(ignored.mlp));
  const EncoderNet abl_init = make_encoder(hash_u64(cfg.seed, 0x61626c2d656e63ull));
  CHECK(weights_hash(res.encoder.mlp) != weights_hash(abl_init.mlp));
}

TEST_CASE("checkpoint: resume reproduces the uninterrupted run bit for bit") {
  namespace fs = std::filesystem;
  const std::string dir = (fs::temp_directory_path() / "trinorm_ckpt_test").string();
  fs::create_directories(dir);
  const std::string ckpt = dir + "/enc.ckpt";

  const std::vector<Triplet> train = separable_triplets(48, 31);
  const std::vector<Triplet> val = separable_triplets(12, 32);
  TrainConfig cfg = micro_config(37);
  cfg.encoder_epochs = 5;

  EncoderTrainer straight(train, val, cfg);
  while (!straight.done()) straight.run_epoch();

  EncoderTrainer first(train, val, cfg);
  first.run_epoch();
  first.run_epoch();
  first.save_checkpoint(ckpt);

  EncoderTrainer resumed(train, val, cfg);
  resumed.resume_checkpoint(ckpt);
  CHECK(resumed.next_epoch() == 2);
  while (!resumed.done()) resumed.run_epoch();

  CHECK(weights_hash(resumed.net().mlp) == weights_hash(straight.net().mlp));
  REQUIRE(resumed.history().size() == straight.history().size());
  for (std::size_t i = 0; i < straight.history().size(); ++i) {
    CHECK(resumed.history()[i].train_loss == straight.history()[i].train_loss);
    CHECK(resumed.history()[i].val_loss == straight.history()[i].val_loss);
    CHECK(resumed.history()[i].lr == straight.history()[i].lr);
  }

  // config-hash mismatch
  TrainConfig changed = cfg;
  changed.batch_size = 8;
  EncoderTrainer other(train, val, changed);
  CHECK_THROWS_AS(other.resume_checkpoint(ckpt), DataError);

  // corrupt checkpoint
  {
    std::ifstream in(ckpt, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), {});
    std::ofstream out(dir + "/trunc.ckpt", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 3));
  }
  EncoderTrainer third(train, val, cfg);
  CHECK_THROWS_AS(third.resume_checkpoint(dir + "/trunc.ckpt"), IoError);

  fs::remove_all(dir);
}

TEST_CASE("estimator checkpoint resume matches the uninterrupted run") {
  namespace fs = std::filesystem;
  const std::string dir = (fs::temp_directory_path() / "trinorm_ckpt_est").string();
  fs::create_directories(dir);
  const std::string ckpt = dir + "/est.ckpt";

  const Dataset& ds = micro_dataset();
  TrainConfig cfg = micro_config(41);
  cfg.estimator_epochs = 4;
  const EncoderNet encoder = make_encoder(401);

  EstimatorTrainer straight(ds.train.patches, ds.val.patches, encoder, cfg);
  while (!straight.done()) straight.run_epoch();

  EstimatorTrainer first(ds.train.patches, ds.val.patches, encoder, cfg);
  first.run_epoch();
  first.save_checkpoint(ckpt);
  EstimatorTrainer resumed(ds.train.patches, ds.val.patches, encoder, cfg);
  resumed.resume_checkpoint(ckpt);
  while (!resumed.done()) resumed.run_epoch();

  CHECK(weights_hash(resumed.net().mlp) == weights_hash(straight.net().mlp));
  fs::remove_all(dir);
}

TEST_CASE("history CSV has the documented columns") {
  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "trinorm_hist.csv").string();
  write_history_csv({{0, 1.5, 2.5, 0.01}, {1, 1.0, 2.0, 0.01}}, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,train_loss,val_loss,lr");
  std::getline(in, line);
  CHECK(line.substr(0, 6) == "0,1.5,");
  fs::remove(path);
}

TEST_CASE("empty training corpus is rejected") {
  TrainConfig cfg = micro_config(43);
  CHECK_THROWS_AS(train_encoder({}, {}, cfg), DataError);
  const EncoderNet enc = make_encoder(1);
  CHECK_THROWS_AS(train_estimator({}, {}, enc, cfg), DataError);
}
