#include "trinorm/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "trinorm/binio.hpp"
#include "trinorm/losses.hpp"
#include "trinorm/rng.hpp"

namespace trinorm {

void TrainConfig::validate() const {
  if (encoder_epochs < 1 || estimator_epochs < 1) throw DataError("epoch counts must be >= 1");
  if (batch_size < 1) throw DataError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw DataError("learning_rate must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw DataError("momentum must be in [0, 1)");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) throw DataError("plateau_factor must be in (0, 1)");
  if (plateau_patience < 1) throw DataError("plateau_patience must be >= 1");
  if (loss_exponent <= 0 || loss_exponent % 2 != 0) throw DataError("loss_exponent must be even and positive");
  if (!(sigma_s_deg > 0.0 && sigma_s_deg < 90.0)) throw DataError("sigma_s must be in (0, 90) degrees");
  if (margin < 0.0) throw DataError("margin must be >= 0");
}

std::uint64_t train_config_hash(const TrainConfig& cfg) {
  std::uint64_t h = 0x544e434647ull;  // "TNCFG"
  auto mix = [&h](std::uint64_t v) { h = hash_u64(h, v); };
  mix(cfg.encoder_epochs);
  mix(cfg.estimator_epochs);
  mix(cfg.batch_size);
  mix(std::bit_cast<std::uint64_t>(cfg.learning_rate));
  mix(std::bit_cast<std::uint64_t>(cfg.momentum));
  mix(std::bit_cast<std::uint64_t>(cfg.plateau_factor));
  mix(static_cast<std::uint64_t>(cfg.plateau_patience));
  mix(cfg.seed);
  mix(cfg.ablation_no_encoder ? 1 : 0);
  mix(static_cast<std::uint64_t>(cfg.loss_exponent));
  mix(std::bit_cast<std::uint64_t>(cfg.sigma_s_deg));
  mix(std::bit_cast<std::uint64_t>(cfg.margin));
  return h;
}

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "epoch,train_loss,val_loss,lr\n";
  char buf[128];
  for (const EpochStats& e : history) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", e.epoch, e.train_loss, e.val_loss, e.lr);
    out << buf;
  }
  if (!out) throw IoError("I/O failure writing '" + path + "'");
}

namespace {

// Fixed reduction chunk: gradient sums are folded per chunk and merged in
// chunk order, so results do not depend on the worker thread count.
constexpr std::size_t kGradChunk = 8;

std::vector<std::uint32_t> epoch_order(std::size_t n, std::uint64_t seed, const char* tag,
                                       std::size_t epoch) {
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  Rng rng(hash_u64(hash_str(seed, tag), epoch));
  rng.shuffle(order);
  return order;
}

// ---- checkpoint plumbing ----------------------------------------------------

constexpr char kCheckpointMagic[9] = "TNCKPT01";

void write_mlp_inline(std::ostream& os, const Mlp& net) {
  write_u64le(os, net.layers.size());
  for (const DenseLayer& l : net.layers) {
    write_u64le(os, l.W.rows());
    write_u64le(os, l.W.cols());
    write_u8(os, static_cast<std::uint8_t>(l.act));
  }
  for (const DenseLayer& l : net.layers) {
    for (std::size_t i = 0; i < l.W.size(); ++i) write_f64le(os, l.W.data()[i]);
    for (double v : l.b) write_f64le(os, v);
  }
}

Mlp read_mlp_inline(std::istream& is) {
  const std::uint64_t n_layers = read_u64le(is);
  if (n_layers == 0 || n_layers > 64) throw IoError("checkpoint: corrupt layer count");
  Mlp net;
  for (std::uint64_t l = 0; l < n_layers; ++l) {
    const std::uint64_t rows = read_u64le(is);
    const std::uint64_t cols = read_u64le(is);
    const std::uint8_t act = read_u8(is);
    if (rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 20) || act > 1) {
      throw IoError("checkpoint: corrupt layer header");
    }
    DenseLayer layer;
    layer.W = Mat(rows, cols);
    layer.b.assign(rows, 0.0);
    layer.act = static_cast<Activation>(act);
    net.layers.push_back(std::move(layer));
  }
  for (DenseLayer& l : net.layers) {
    for (std::size_t i = 0; i < l.W.size(); ++i) l.W.data()[i] = read_f64le(is);
    for (double& v : l.b) v = read_f64le(is);
  }
  return net;
}

void write_optimizer(std::ostream& os, const SgdOptimizer& opt) {
  write_f64le(os, opt.learning_rate);
  write_f64le(os, opt.momentum);
  write_u64le(os, opt.velocity.size());
  for (const auto& buf : opt.velocity) {
    write_u64le(os, buf.size());
    for (double v : buf) write_f64le(os, v);
  }
}

void read_optimizer(std::istream& is, SgdOptimizer& opt) {
  opt.learning_rate = read_f64le(is);
  opt.momentum = read_f64le(is);
  const std::uint64_t n = read_u64le(is);
  if (opt.velocity.size() != n) throw IoError("checkpoint: optimizer buffer count mismatch");
  for (auto& buf : opt.velocity) {
    const std::uint64_t m = read_u64le(is);
    if (buf.size() != m) throw IoError("checkpoint: optimizer buffer size mismatch");
    for (double& v : buf) v = read_f64le(is);
  }
}

void write_scheduler(std::ostream& os, const PlateauScheduler& s) {
  write_f64le(os, s.factor);
  write_u64le(os, static_cast<std::uint64_t>(s.patience));
  write_f64le(os, s.learning_rate);
  write_f64le(os, s.best_metric);
  write_u64le(os, static_cast<std::uint64_t>(s.stagnant_count));
  write_u8(os, s.has_best ? 1 : 0);
}

void read_scheduler(std::istream& is, PlateauScheduler& s) {
  s.factor = read_f64le(is);
  s.patience = static_cast<int>(read_u64le(is));
  s.learning_rate = read_f64le(is);
  s.best_metric = read_f64le(is);
  s.stagnant_count = static_cast<int>(read_u64le(is));
  s.has_best = read_u8(is) != 0;
}

void write_history(std::ostream& os, const std::vector<EpochStats>& h) {
  write_u64le(os, h.size());
  for (const EpochStats& e : h) {
    write_u64le(os, e.epoch);
    write_f64le(os, e.train_loss);
    write_f64le(os, e.val_loss);
    write_f64le(os, e.lr);
  }
}

std::vector<EpochStats> read_history(std::istream& is) {
  const std::uint64_t n = read_u64le(is);
  if (n > (1u << 24)) throw IoError("checkpoint: corrupt history length");
  std::vector<EpochStats> h(n);
  for (EpochStats& e : h) {
    e.epoch = read_u64le(is);
    e.train_loss = read_f64le(is);
    e.val_loss = read_f64le(is);
    e.lr = read_f64le(is);
  }
  return h;
}

}  // namespace

// ---- encoder phase ----------------------------------------------------------

EncoderTrainer::EncoderTrainer(std::span<const Triplet> train, std::span<const Triplet> val,
                               const TrainConfig& cfg)
    : train_(train), val_(val), cfg_(cfg), net_(make_encoder(hash_u64(cfg.seed, 0x656e63ull))) {
  cfg_.validate();
  if (train_.empty()) throw DataError("encoder training corpus is empty");
  batch_grads_.init_like(net_.mlp);
  opt_.learning_rate = cfg_.learning_rate;
  opt_.momentum = cfg_.momentum;
  auto params = param_refs(net_.mlp);
  opt_.init(params);
  sched_.factor = cfg_.plateau_factor;
  sched_.patience = cfg_.plateau_patience;
  sched_.learning_rate = cfg_.learning_rate;
}

void EncoderTrainer::run_epoch() {
  if (done()) return;
  const std::size_t n = train_.size();
  const auto order = epoch_order(n, cfg_.seed, "enc-epoch", next_epoch_);
  const double lr_used = sched_.learning_rate;
  opt_.learning_rate = lr_used;

  const std::size_t max_chunks = (cfg_.batch_size + kGradChunk - 1) / kGradChunk;
  std::vector<MlpGrads> chunk_grads(max_chunks);
  for (auto& g : chunk_grads) g.init_like(net_.mlp);
  std::vector<double> chunk_loss(max_chunks, 0.0);

  const TripletMargin margin{cfg_.margin};
  double loss_sum = 0.0;
  for (std::size_t b0 = 0; b0 < n; b0 += cfg_.batch_size) {
    const std::size_t b1 = std::min(n, b0 + cfg_.batch_size);
    const std::size_t bsz = b1 - b0;
    const std::size_t nchunks = (bsz + kGradChunk - 1) / kGradChunk;

    parallel_for(nchunks, [&](std::size_t c) {
      MlpGrads& grads = chunk_grads[c];
      grads.zero();
      double local = 0.0;
      EncoderCache ca, cs, ct;
      const std::size_t i0 = b0 + c * kGradChunk;
      const std::size_t i1 = std::min(b1, i0 + kGradChunk);
      for (std::size_t i = i0; i < i1; ++i) {
        const Triplet& t = train_[order[i]];
        const std::vector<double> fp = encoder_forward(net_, t.anchor.points, ca);
        const std::vector<double> fs = encoder_forward(net_, t.positive.points, cs);
        const std::vector<double> ft = encoder_forward(net_, t.negative.points, ct);
        const TripletLossResult L = triplet_loss(fp, fs, ft, margin);
        local += L.loss;
        if (L.loss > 0.0) {
          encoder_backward(net_, t.anchor.points, ca, L.d_anchor, grads);
          encoder_backward(net_, t.positive.points, cs, L.d_positive, grads);
          encoder_backward(net_, t.negative.points, ct, L.d_negative, grads);
        }
      }
      chunk_loss[c] = local;
    });

    batch_grads_.zero();
    double batch_loss = 0.0;
    for (std::size_t c = 0; c < nchunks; ++c) {
      batch_grads_.add(chunk_grads[c]);
      batch_loss += chunk_loss[c];
    }
    if (!std::isfinite(batch_loss)) {
      throw NumericError("encoder training: non-finite loss at epoch " +
                         std::to_string(next_epoch_) + ", batch offset " + std::to_string(b0));
    }
    batch_grads_.scale(1.0 / static_cast<double>(bsz));
    auto params = param_refs(net_.mlp);
    auto grads = grad_refs(batch_grads_);
    if (!opt_.step(params, grads)) ++skipped_steps_;
    loss_sum += batch_loss;
  }

  const double train_mean = loss_sum / static_cast<double>(n);
  double val_mean = train_mean;
  if (!val_.empty()) {
    std::vector<double> slots(val_.size());
    parallel_for(val_.size(), [&](std::size_t i) {
      EncoderCache ca, cs, ct;
      const Triplet& t = val_[i];
      const std::vector<double> fp = encoder_forward(net_, t.anchor.points, ca);
      const std::vector<double> fs = encoder_forward(net_, t.positive.points, cs);
      const std::vector<double> ft = encoder_forward(net_, t.negative.points, ct);
      slots[i] = triplet_loss(fp, fs, ft, margin).loss;
    });
    double s = 0.0;
    for (double v : slots) s += v;
    val_mean = s / static_cast<double>(val_.size());
  }
  history_.push_back({next_epoch_, train_mean, val_mean, lr_used});
  sched_.update(val_mean);
  ++next_epoch_;
}

void EncoderTrainer::save_checkpoint(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_magic(out, kCheckpointMagic);
  write_u64le(out, train_config_hash(cfg_));
  write_u8(out, 0);  // phase: encoder
  write_u64le(out, next_epoch_);
  write_u64le(out, skipped_steps_);
  write_scheduler(out, sched_);
  write_mlp_inline(out, net_.mlp);
  write_optimizer(out, opt_);
  write_history(out, history_);
  if (!out) throw IoError("I/O failure writing '" + path + "'");
}

void EncoderTrainer::resume_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  expect_magic(in, kCheckpointMagic, "checkpoint");
  if (read_u64le(in) != train_config_hash(cfg_)) {
    throw DataError("checkpoint config hash does not match the current configuration");
  }
  if (read_u8(in) != 0) throw DataError("checkpoint is not an encoder-phase checkpoint");
  next_epoch_ = read_u64le(in);
  skipped_steps_ = read_u64le(in);
  read_scheduler(in, sched_);
  net_.mlp = read_mlp_inline(in);
  read_optimizer(in, opt_);
  history_ = read_history(in);
}

// ---- estimator phase --------------------------------------------------------

EstimatorTrainer::EstimatorTrainer(std::span<const LabeledPatch> train,
                                   std::span<const LabeledPatch> val, const EncoderNet& encoder,
                                   const TrainConfig& cfg)
    : train_(train), val_(val), cfg_(cfg),
      encoder_(cfg.ablation_no_encoder ? make_encoder(hash_u64(cfg.seed, 0x61626c2d656e63ull))
                                       : encoder),
      net_(make_estimator(hash_u64(cfg.seed, 0x657374ull))) {
  cfg_.validate();
  if (train_.empty()) throw DataError("estimator training corpus is empty");
  batch_grads_est_.init_like(net_.mlp);
  opt_.learning_rate = cfg_.learning_rate;
  opt_.momentum = cfg_.momentum;
  if (cfg_.ablation_no_encoder) {
    batch_grads_enc_.init_like(encoder_.mlp);
    auto params = param_refs(net_.mlp);
    auto enc_params = param_refs(encoder_.mlp);
    params.insert(params.end(), enc_params.begin(), enc_params.end());
    opt_.init(params);
  } else {
    auto params = param_refs(net_.mlp);
    opt_.init(params);
    precompute_latents();
  }
  sched_.factor = cfg_.plateau_factor;
  sched_.patience = cfg_.plateau_patience;
  sched_.learning_rate = cfg_.learning_rate;
}

void EstimatorTrainer::precompute_latents() {
  train_latents_.resize(train_.size());
  parallel_for(train_.size(), [&](std::size_t i) {
    EncoderCache cache;
    train_latents_[i] = encoder_forward(encoder_, train_[i].patch.points, cache);
  });
  val_latents_.resize(val_.size());
  parallel_for(val_.size(), [&](std::size_t i) {
    EncoderCache cache;
    val_latents_[i] = encoder_forward(encoder_, val_[i].patch.points, cache);
  });
}

double EstimatorTrainer::item_loss_and_grads(const LabeledPatch& item,
                                             std::span<const double> latent, MlpGrads* est_grads,
                                             MlpGrads* enc_grads) {
  const SupportAngle sigma{cfg_.sigma_s_deg};
  if (!cfg_.ablation_no_encoder) {
    EstimatorCache cache;
    const Normal3 pred = estimator_forward(net_, latent, cache);
    const NormalLossResult res =
        normal_loss_exponent(pred, item.gt_normals, item.center_gt, sigma, cfg_.loss_exponent);
    if (est_grads != nullptr) {
      estimator_backward(net_, latent, cache, res.d_pred, *est_grads, nullptr);
    }
    return res.loss;
  }
  EncoderCache ec;
  EstimatorCache sc;
  const std::vector<double> lat = encoder_forward(encoder_, item.patch.points, ec);
  const Normal3 pred = estimator_forward(net_, lat, sc);
  const NormalLossResult res =
      normal_loss_exponent(pred, item.gt_normals, item.center_gt, sigma, cfg_.loss_exponent);
  if (est_grads != nullptr) {
    std::vector<double> dlatent;
    estimator_backward(net_, lat, sc, res.d_pred, *est_grads, &dlatent);
    encoder_backward(encoder_, item.patch.points, ec, dlatent, *enc_grads);
  }
  return res.loss;
}

void EstimatorTrainer::run_epoch() {
  if (done()) return;
  const std::size_t n = train_.size();
  const auto order = epoch_order(n, cfg_.seed, "est-epoch", next_epoch_);
  const double lr_used = sched_.learning_rate;
  opt_.learning_rate = lr_used;
  const bool ablation = cfg_.ablation_no_encoder;

  const std::size_t max_chunks = (cfg_.batch_size + kGradChunk - 1) / kGradChunk;
  std::vector<MlpGrads> chunk_est(max_chunks), chunk_enc(ablation ? max_chunks : 0);
  for (auto& g : chunk_est) g.init_like(net_.mlp);
  for (auto& g : chunk_enc) g.init_like(encoder_.mlp);
  std::vector<double> chunk_loss(max_chunks, 0.0);

  double loss_sum = 0.0;
  for (std::size_t b0 = 0; b0 < n; b0 += cfg_.batch_size) {
    const std::size_t b1 = std::min(n, b0 + cfg_.batch_size);
    const std::size_t bsz = b1 - b0;
    const std::size_t nchunks = (bsz + kGradChunk - 1) / kGradChunk;

    parallel_for(nchunks, [&](std::size_t c) {
      MlpGrads& eg = chunk_est[c];
      eg.zero();
      MlpGrads* ng = nullptr;
      if (ablation) {
        chunk_enc[c].zero();
        ng = &chunk_enc[c];
      }
      double local = 0.0;
      const std::size_t i0 = b0 + c * kGradChunk;
      const std::size_t i1 = std::min(b1, i0 + kGradChunk);
      for (std::size_t i = i0; i < i1; ++i) {
        const std::size_t idx = order[i];
        local += item_loss_and_grads(train_[idx],
                                     ablation ? std::span<const double>{} : train_latents_[idx],
                                     &eg, ng);
      }
      chunk_loss[c] = local;
    });

    batch_grads_est_.zero();
    if (ablation) batch_grads_enc_.zero();
    double batch_loss = 0.0;
    for (std::size_t c = 0; c < nchunks; ++c) {
      batch_grads_est_.add(chunk_est[c]);
      if (ablation) batch_grads_enc_.add(chunk_enc[c]);
      batch_loss += chunk_loss[c];
    }
    if (!std::isfinite(batch_loss)) {
      throw NumericError("estimator training: non-finite loss at epoch " +
                         std::to_string(next_epoch_) + ", batch offset " + std::to_string(b0));
    }
    const double inv = 1.0 / static_cast<double>(bsz);
    batch_grads_est_.scale(inv);
    auto params = param_refs(net_.mlp);
    auto grads = grad_refs(batch_grads_est_);
    if (ablation) {
      batch_grads_enc_.scale(inv);
      auto enc_params = param_refs(encoder_.mlp);
      auto enc_grads = grad_refs(batch_grads_enc_);
      params.insert(params.end(), enc_params.begin(), enc_params.end());
      grads.insert(grads.end(), enc_grads.begin(), enc_grads.end());
    }
    if (!opt_.step(params, grads)) ++skipped_steps_;
    loss_sum += batch_loss;
  }

  const double train_mean = loss_sum / static_cast<double>(n);
  double val_mean = train_mean;
  if (!val_.empty()) {
    std::vector<double> slots(val_.size());
    parallel_for(val_.size(), [&](std::size_t i) {
      slots[i] = item_loss_and_grads(
          val_[i], ablation ? std::span<const double>{} : val_latents_[i], nullptr, nullptr);
    });
    double s = 0.0;
    for (double v : slots) s += v;
    val_mean = s / static_cast<double>(val_.size());
  }
  history_.push_back({next_epoch_, train_mean, val_mean, lr_used});
  sched_.update(val_mean);
  ++next_epoch_;
}

void EstimatorTrainer::save_checkpoint(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_magic(out, kCheckpointMagic);
  write_u64le(out, train_config_hash(cfg_));
  write_u8(out, cfg_.ablation_no_encoder ? 2 : 1);
  write_u64le(out, next_epoch_);
  write_u64le(out, skipped_steps_);
  write_scheduler(out, sched_);
  write_mlp_inline(out, net_.mlp);
  write_mlp_inline(out, encoder_.mlp);
  write_optimizer(out, opt_);
  write_history(out, history_);
  if (!out) throw IoError("I/O failure writing '" + path + "'");
}

void EstimatorTrainer::resume_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  expect_magic(in, kCheckpointMagic, "checkpoint");
  if (read_u64le(in) != train_config_hash(cfg_)) {
    throw DataError("checkpoint config hash does not match the current configuration");
  }
  const std::uint8_t phase = read_u8(in);
  if (phase != (cfg_.ablation_no_encoder ? 2 : 1)) {
    throw DataError("checkpoint phase does not match this trainer");
  }
  next_epoch_ = read_u64le(in);
  skipped_steps_ = read_u64le(in);
  read_scheduler(in, sched_);
  net_.mlp = read_mlp_inline(in);
  encoder_.mlp = read_mlp_inline(in);
  read_optimizer(in, opt_);
  history_ = read_history(in);
  if (!cfg_.ablation_no_encoder) precompute_latents();
}

// ---- convenience drivers ----------------------------------------------------

EncoderTrainResult train_encoder(std::span<const Triplet> train, std::span<const Triplet> val,
                                 const TrainConfig& cfg, const EpochHook& hook) {
  EncoderTrainer trainer(train, val, cfg);
  while (!trainer.done()) {
    trainer.run_epoch();
    if (hook) hook(trainer.next_epoch());
  }
  return {trainer.net(), trainer.history()};
}

EstimatorTrainResult train_estimator(std::span<const LabeledPatch> train,
                                     std::span<const LabeledPatch> val, const EncoderNet& encoder,
                                     const TrainConfig& cfg, const EpochHook& hook) {
  EstimatorTrainer trainer(train, val, encoder, cfg);
  while (!trainer.done()) {
    trainer.run_epoch();
    if (hook) hook(trainer.next_epoch());
  }
  return {trainer.net(), trainer.encoder(), trainer.history()};
}

}  // namespace trinorm
