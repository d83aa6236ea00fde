#pragma once

// Dense network machinery built directly on the kernels: shared-weight
// per-point MLP with max-pool aggregation (the feature encoder) and a plain
// MLP regressor with explicit unit normalization (the normal estimator).
// All math is 64-bit; reverse-mode gradients are exact and finite-difference
// checked in the tests.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "trinorm/geometry.hpp"
#include "trinorm/linalg.hpp"

namespace trinorm {

enum class Activation : std::uint8_t { none = 0, relu = 1 };

struct DenseLayer {
  Mat W;                  // out x in
  std::vector<double> b;  // out
  Activation act = Activation::none;
};

struct Mlp {
  std::vector<DenseLayer> layers;

  std::size_t input_width() const { return layers.front().W.cols(); }
  std::size_t output_width() const { return layers.back().W.rows(); }
  std::size_t param_count() const;
  bool operator==(const Mlp& o) const;
};

// He-uniform init for relu layers, Xavier-uniform for linear ones; zero
// biases. Deterministic per seed.
Mlp make_mlp(std::span<const std::size_t> widths, std::span<const Activation> acts,
             std::uint64_t seed);

struct MlpCache {
  std::vector<Mat> acts;  // acts[0] = input, acts[i+1] = layer i output
};

// Forward over `rows` independent input rows. Returns the final activation
// matrix (rows x output_width), kept alive inside the cache.
const Mat& mlp_forward(const Mlp& net, const Mat& input, MlpCache& cache);

struct MlpGrads {
  std::vector<Mat> dW;
  std::vector<std::vector<double>> db;

  void init_like(const Mlp& net);
  void zero();
  void add(const MlpGrads& other);   // elementwise, deterministic
  void scale(double s);
  bool all_finite() const;
};

// Reverse pass. `dout` is the gradient w.r.t. the final activations and is
// clobbered. When dinput is non-null it receives the gradient w.r.t. the
// input rows.
void mlp_backward(const Mlp& net, const MlpCache& cache, Mat& dout, MlpGrads& grads,
                  Mat* dinput);

// ---- feature encoder -------------------------------------------------------

struct EncoderNet {
  static constexpr std::size_t kLatentWidth = 1024;
  Mlp mlp;  // per-point stack, shared across all patch rows
};

struct EncoderCache {
  MlpCache mlp;
  std::vector<std::uint32_t> argmax;  // pooled row per latent channel
};

EncoderNet make_encoder(std::uint64_t seed);

// Shared per-point MLP followed by a coordinate-wise max over rows. Exactly
// permutation invariant: any row order yields bit-identical latents.
std::vector<double> encoder_forward(const EncoderNet& net, const Mat& patch, EncoderCache& cache);

// Routes the latent gradient through the pool's argmax rows, then through the
// shared stack. Accumulates into `grads`.
void encoder_backward(const EncoderNet& net, const Mat& patch, const EncoderCache& cache,
                      std::span<const double> dlatent, MlpGrads& grads);

// ---- normal estimator ------------------------------------------------------

struct EstimatorNet {
  Mlp mlp;  // 1024 -> 512 -> 256 -> 3, linear output
};

struct EstimatorCache {
  MlpCache mlp;
  Vec3 raw{};
  double raw_norm = 0.0;
  Vec3 pred{};
};

EstimatorNet make_estimator(std::uint64_t seed);

// Unit-norm prediction. Throws NumericError when the pre-normalization output
// norm is below 1e-12.
Normal3 estimator_forward(const EstimatorNet& net, std::span<const double> latent,
                          EstimatorCache& cache);

// Chains d(loss)/d(pred) through the unit normalization and the MLP.
// When dlatent is non-null it receives the gradient w.r.t. the latent.
void estimator_backward(const EstimatorNet& net, std::span<const double> latent,
                        const EstimatorCache& cache, const Vec3& dpred, MlpGrads& grads,
                        std::vector<double>* dlatent);

// ---- weight files ("TNWTS001") ---------------------------------------------

void save_weights(const Mlp& net, const std::string& path);
Mlp load_weights(const std::string& path);

void save_encoder(const EncoderNet& net, const std::string& path);
void save_estimator(const EstimatorNet& net, const std::string& path);
// Validate the on-disk architecture against the expected stack.
EncoderNet load_encoder(const std::string& path);
EstimatorNet load_estimator(const std::string& path);

// FNV-1a over the serialized bytes; used to confirm weight identity.
std::uint64_t weights_hash(const Mlp& net);

// Flat views over parameters, in a fixed order shared with MlpGrads.
struct ParamRef {
  double* data;
  std::size_t n;
};
std::vector<ParamRef> param_refs(Mlp& net);
std::vector<ParamRef> grad_refs(MlpGrads& grads);

}  // namespace trinorm
