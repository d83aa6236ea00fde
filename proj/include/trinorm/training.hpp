#pragma once

// The two training phases: (a) triplet training of the feature encoder and
// (b) weighted cosine-loss training of the normal estimator on frozen
// encoder latents — or jointly from scratch in the no-encoder ablation.
// Both trainers are deterministic per seed, independent of the worker thread
// count (fixed-chunk gradient reduction), and checkpointable at epoch
// boundaries with bit-exact resume.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "trinorm/dataset.hpp"
#include "trinorm/nn.hpp"
#include "trinorm/optimizer.hpp"

namespace trinorm {

struct TrainConfig {
  std::size_t encoder_epochs = 5;
  std::size_t estimator_epochs = 50;
  std::size_t batch_size = 64;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double plateau_factor = 0.1;
  int plateau_patience = 3;
  std::uint64_t seed = 0;
  bool ablation_no_encoder = false;
  int loss_exponent = 8;
  double sigma_s_deg = 15.0;
  double margin = 0.0;

  void validate() const;
};

// Hash of every train-config field; checkpoints refuse to resume a run whose
// config hash differs.
std::uint64_t train_config_hash(const TrainConfig& cfg);

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;  // rate in effect during the epoch
};

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path);

class EncoderTrainer {
 public:
  EncoderTrainer(std::span<const Triplet> train, std::span<const Triplet> val,
                 const TrainConfig& cfg);

  void run_epoch();
  bool done() const { return next_epoch_ >= cfg_.encoder_epochs; }
  std::size_t next_epoch() const { return next_epoch_; }
  std::size_t skipped_steps() const { return skipped_steps_; }  // non-finite-gradient steps
  const std::vector<EpochStats>& history() const { return history_; }
  const EncoderNet& net() const { return net_; }
  EncoderNet& net() { return net_; }

  void save_checkpoint(const std::string& path) const;
  void resume_checkpoint(const std::string& path);

 private:
  std::span<const Triplet> train_, val_;
  TrainConfig cfg_;
  EncoderNet net_;
  MlpGrads batch_grads_;
  SgdOptimizer opt_;
  PlateauScheduler sched_;
  std::vector<EpochStats> history_;
  std::size_t next_epoch_ = 0;
  std::size_t skipped_steps_ = 0;
};

class EstimatorTrainer {
 public:
  // Frozen-encoder phase: latents are precomputed once from `encoder`. In
  // ablation mode the encoder argument is ignored and a fresh encoder is
  // trained jointly with the estimator on the patch loss alone.
  EstimatorTrainer(std::span<const LabeledPatch> train, std::span<const LabeledPatch> val,
                   const EncoderNet& encoder, const TrainConfig& cfg);

  void run_epoch();
  bool done() const { return next_epoch_ >= cfg_.estimator_epochs; }
  std::size_t next_epoch() const { return next_epoch_; }
  std::size_t skipped_steps() const { return skipped_steps_; }
  const std::vector<EpochStats>& history() const { return history_; }
  const EstimatorNet& net() const { return net_; }
  const EncoderNet& encoder() const { return encoder_; }

  void save_checkpoint(const std::string& path) const;
  void resume_checkpoint(const std::string& path);

 private:
  double item_loss_and_grads(const LabeledPatch& item, std::span<const double> latent,
                             MlpGrads* est_grads, MlpGrads* enc_grads);
  void precompute_latents();

  std::span<const LabeledPatch> train_, val_;
  TrainConfig cfg_;
  EncoderNet encoder_;
  EstimatorNet net_;
  MlpGrads batch_grads_est_, batch_grads_enc_;
  SgdOptimizer opt_;
  PlateauScheduler sched_;
  std::vector<EpochStats> history_;
  std::vector<std::vector<double>> train_latents_, val_latents_;
  std::size_t next_epoch_ = 0;
  std::size_t skipped_steps_ = 0;
};

using EpochHook = std::function<void(std::size_t epochs_done)>;

struct EncoderTrainResult {
  EncoderNet net;
  std::vector<EpochStats> history;
};

struct EstimatorTrainResult {
  EstimatorNet net;
  EncoderNet encoder;  // the input encoder, or the jointly trained one in ablation mode
  std::vector<EpochStats> history;
};

EncoderTrainResult train_encoder(std::span<const Triplet> train, std::span<const Triplet> val,
                                 const TrainConfig& cfg, const EpochHook& hook = {});

EstimatorTrainResult train_estimator(std::span<const LabeledPatch> train,
                                     std::span<const LabeledPatch> val, const EncoderNet& encoder,
                                     const TrainConfig& cfg, const EpochHook& hook = {});

}  // namespace trinorm
