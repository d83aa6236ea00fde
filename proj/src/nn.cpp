#include "trinorm/nn.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "trinorm/binio.hpp"
#include "trinorm/kernels.hpp"
#include "trinorm/rng.hpp"

namespace trinorm {

namespace {
constexpr std::array<std::size_t, 5> kEncoderWidths{3, 64, 64, 128, 1024};
constexpr std::array<Activation, 4> kEncoderActs{Activation::relu, Activation::relu,
                                                 Activation::relu, Activation::relu};
constexpr std::array<std::size_t, 4> kEstimatorWidths{1024, 512, 256, 3};
constexpr std::array<Activation, 3> kEstimatorActs{Activation::relu, Activation::relu,
                                                   Activation::none};
}  // namespace

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers) n += l.W.size() + l.b.size();
  return n;
}

bool Mlp::operator==(const Mlp& o) const {
  if (layers.size() != o.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!(layers[i].W == o.layers[i].W) || layers[i].b != o.layers[i].b ||
        layers[i].act != o.layers[i].act) {
      return false;
    }
  }
  return true;
}

Mlp make_mlp(std::span<const std::size_t> widths, std::span<const Activation> acts,
             std::uint64_t seed) {
  if (widths.size() < 2 || acts.size() != widths.size() - 1) {
    throw DataError("make_mlp: inconsistent widths/activations");
  }
  Mlp net;
  Rng rng(hash_u64(seed, 0x696e6974ull));  // "init"
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t fan_in = widths[l];
    const std::size_t fan_out = widths[l + 1];
    DenseLayer layer;
    layer.W = Mat(fan_out, fan_in);
    layer.b.assign(fan_out, 0.0);
    layer.act = acts[l];
    const double limit = acts[l] == Activation::relu
                             ? std::sqrt(6.0 / static_cast<double>(fan_in))
                             : std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = 0; i < layer.W.size(); ++i) {
      layer.W.data()[i] = rng.uniform(-limit, limit);
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

const Mat& mlp_forward(const Mlp& net, const Mat& input, MlpCache& cache) {
  if (input.cols() != net.input_width()) throw DataError("mlp_forward: input width mismatch");
  const auto& k = kernels::ops();
  cache.acts.resize(net.layers.size() + 1);
  cache.acts[0] = input;
  const std::size_t rows = input.rows();
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const DenseLayer& layer = net.layers[l];
    Mat& out = cache.acts[l + 1];
    if (out.rows() != rows || out.cols() != layer.W.rows()) out = Mat(rows, layer.W.rows());
    k.dense_forward(layer.W.data(), layer.b.data(), cache.acts[l].data(), out.data(),
                    rows, layer.W.cols(), layer.W.rows(), layer.act == Activation::relu);
  }
  return cache.acts.back();
}

void MlpGrads::init_like(const Mlp& net) {
  dW.clear();
  db.clear();
  for (const DenseLayer& l : net.layers) {
    dW.emplace_back(l.W.rows(), l.W.cols());
    db.emplace_back(l.b.size(), 0.0);
  }
}

void MlpGrads::zero() {
  for (Mat& m : dW) m.fill(0.0);
  for (auto& v : db) std::fill(v.begin(), v.end(), 0.0);
}

void MlpGrads::add(const MlpGrads& other) {
  const auto& k = kernels::ops();
  for (std::size_t l = 0; l < dW.size(); ++l) {
    k.add_inplace(other.dW[l].data(), dW[l].data(), dW[l].size());
    k.add_inplace(other.db[l].data(), db[l].data(), db[l].size());
  }
}

void MlpGrads::scale(double s) {
  for (Mat& m : dW) {
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] *= s;
  }
  for (auto& v : db) {
    for (double& x : v) x *= s;
  }
}

bool MlpGrads::all_finite() const {
  for (const Mat& m : dW) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (!std::isfinite(m.data()[i])) return false;
    }
  }
  for (const auto& v : db) {
    for (double x : v) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

void mlp_backward(const Mlp& net, const MlpCache& cache, Mat& dout, MlpGrads& grads,
                  Mat* dinput) {
  const auto& k = kernels::ops();
  const std::size_t rows = dout.rows();
  Mat next;
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const DenseLayer& layer = net.layers[li];
    const Mat& x = cache.acts[li];
    if (layer.act == Activation::relu) {
      k.relu_backward_mask(cache.acts[li + 1].data(), dout.data(), dout.size());
    }
    k.dense_grad_accum(x.data(), dout.data(), grads.dW[li].data(), grads.db[li].data(),
                       rows, layer.W.cols(), layer.W.rows());
    const bool need_dx = li > 0 || dinput != nullptr;
    if (!need_dx) break;
    Mat& dx = li > 0 ? next : *dinput;
    if (dx.rows() != rows || dx.cols() != layer.W.cols()) dx = Mat(rows, layer.W.cols());
    k.dense_backward_data(layer.W.data(), dout.data(), dx.data(), rows, layer.W.cols(),
                          layer.W.rows());
    if (li > 0) {
      std::swap(dout, next);
    }
  }
}

EncoderNet make_encoder(std::uint64_t seed) {
  return EncoderNet{make_mlp(kEncoderWidths, kEncoderActs, hash_u64(seed, 0x656e63ull))};
}

std::vector<double> encoder_forward(const EncoderNet& net, const Mat& patch, EncoderCache& cache) {
  if (patch.cols() != 3) throw DataError("encoder_forward: patch must be k x 3");
  if (patch.rows() == 0) throw DataError("encoder_forward: empty patch");
  const Mat& features = mlp_forward(net.mlp, patch, cache.mlp);
  const std::size_t width = features.cols();
  std::vector<double> latent(width);
  cache.argmax.resize(width);
  kernels::ops().max_pool(features.data(), features.rows(), width, latent.data(),
                          cache.argmax.data());
  return latent;
}

void encoder_backward(const EncoderNet& net, const Mat& patch, const EncoderCache& cache,
                      std::span<const double> dlatent, MlpGrads& grads) {
  const auto& k = kernels::ops();
  const std::size_t nlayers = net.mlp.layers.size();
  const DenseLayer& last = net.mlp.layers[nlayers - 1];
  const Mat& last_in = cache.mlp.acts[nlayers - 1];    // rows x in_last
  const Mat& last_out = cache.mlp.acts[nlayers];       // rows x latent width
  const std::size_t rows = last_in.rows();
  const std::size_t in_last = last.W.cols();
  const std::size_t width = last.W.rows();
  if (dlatent.size() != width) throw DataError("encoder_backward: latent width mismatch");

  // The pool routes each channel's gradient to one row; exploit that sparsity
  // at the widest layer instead of materializing a rows x width matrix.
  Mat dx(rows, in_last);
  for (std::size_t c = 0; c < width; ++c) {
    double g = dlatent[c];
    if (g == 0.0) continue;
    const std::uint32_t r = cache.argmax[c];
    if (last.act == Activation::relu && !(last_out(r, c) > 0.0)) continue;
    k.axpy(g, last_in.row(r), grads.dW[nlayers - 1].row(c), in_last);
    grads.db[nlayers - 1][c] += g;
    k.axpy(g, last.W.row(c), dx.row(r), in_last);
  }

  // Dense reverse pass through the remaining layers.
  Mat next;
  for (std::size_t li = nlayers - 1; li-- > 0;) {
    const DenseLayer& layer = net.mlp.layers[li];
    const Mat& x = cache.mlp.acts[li];
    if (layer.act == Activation::relu) {
      k.relu_backward_mask(cache.mlp.acts[li + 1].data(), dx.data(), dx.size());
    }
    k.dense_grad_accum(x.data(), dx.data(), grads.dW[li].data(), grads.db[li].data(),
                       rows, layer.W.cols(), layer.W.rows());
    if (li == 0) break;
    if (next.rows() != rows || next.cols() != layer.W.cols()) next = Mat(rows, layer.W.cols());
    k.dense_backward_data(layer.W.data(), dx.data(), next.data(), rows, layer.W.cols(),
                          layer.W.rows());
    std::swap(dx, next);
  }
  (void)patch;
}

EstimatorNet make_estimator(std::uint64_t seed) {
  return EstimatorNet{make_mlp(kEstimatorWidths, kEstimatorActs, hash_u64(seed, 0x657374ull))};
}

Normal3 estimator_forward(const EstimatorNet& net, std::span<const double> latent,
                          EstimatorCache& cache) {
  if (latent.size() != net.mlp.input_width()) throw DataError("estimator_forward: latent width mismatch");
  Mat input(1, latent.size());
  std::memcpy(input.data(), latent.data(), latent.size() * sizeof(double));
  const Mat& out = mlp_forward(net.mlp, input, cache.mlp);
  cache.raw = {out(0, 0), out(0, 1), out(0, 2)};
  cache.raw_norm = norm(cache.raw);
  if (cache.raw_norm < 1e-12) {
    throw NumericError("estimator_forward: unstable output (norm below 1e-12)");
  }
  cache.pred = cache.raw / cache.raw_norm;
  return cache.pred;
}

void estimator_backward(const EstimatorNet& net, std::span<const double> latent,
                        const EstimatorCache& cache, const Vec3& dpred, MlpGrads& grads,
                        std::vector<double>* dlatent) {
  (void)latent;
  // pred = raw / |raw|  =>  draw = (dpred - pred (pred . dpred)) / |raw|
  const Vec3 draw = (dpred - cache.pred * dot(cache.pred, dpred)) / cache.raw_norm;
  Mat dout(1, 3);
  dout(0, 0) = draw.x;
  dout(0, 1) = draw.y;
  dout(0, 2) = draw.z;
  Mat dinput;
  mlp_backward(net.mlp, cache.mlp, dout, grads, dlatent != nullptr ? &dinput : nullptr);
  if (dlatent != nullptr) {
    dlatent->assign(dinput.data(), dinput.data() + dinput.size());
  }
}

// ---- weight files -----------------------------------------------------------

namespace {
constexpr char kWeightsMagic[9] = "TNWTS001";
}

void save_weights(const Mlp& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_magic(out, kWeightsMagic);
  write_u64le(out, net.layers.size());
  for (const DenseLayer& l : net.layers) {
    write_u64le(out, l.W.rows());
    write_u64le(out, l.W.cols());
    write_u8(out, static_cast<std::uint8_t>(l.act));
  }
  for (const DenseLayer& l : net.layers) {
    for (std::size_t i = 0; i < l.W.size(); ++i) write_f64le(out, l.W.data()[i]);
    for (double v : l.b) write_f64le(out, v);
  }
  if (!out) throw IoError("I/O failure writing '" + path + "'");
}

Mlp load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  expect_magic(in, kWeightsMagic, "weights");
  const std::uint64_t n_layers = read_u64le(in);
  if (n_layers == 0 || n_layers > 64) throw IoError(path + ": corrupt layer count");
  Mlp net;
  for (std::uint64_t l = 0; l < n_layers; ++l) {
    const std::uint64_t rows = read_u64le(in);
    const std::uint64_t cols = read_u64le(in);
    const std::uint8_t act = read_u8(in);
    if (rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 20) || act > 1) {
      throw IoError(path + ": corrupt layer header");
    }
    DenseLayer layer;
    layer.W = Mat(rows, cols);
    layer.b.assign(rows, 0.0);
    layer.act = static_cast<Activation>(act);
    net.layers.push_back(std::move(layer));
  }
  for (DenseLayer& l : net.layers) {
    for (std::size_t i = 0; i < l.W.size(); ++i) l.W.data()[i] = read_f64le(in);
    for (double& v : l.b) v = read_f64le(in);
  }
  return net;
}

namespace {

void check_architecture(const Mlp& net, std::span<const std::size_t> widths,
                        std::span<const Activation> acts, const char* what) {
  bool ok = net.layers.size() == widths.size() - 1;
  if (ok) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      ok = ok && net.layers[l].W.cols() == widths[l] && net.layers[l].W.rows() == widths[l + 1] &&
           net.layers[l].act == acts[l];
    }
  }
  if (!ok) {
    throw DataError(std::string("weight file does not match the ") + what + " architecture");
  }
}

}  // namespace

void save_encoder(const EncoderNet& net, const std::string& path) { save_weights(net.mlp, path); }
void save_estimator(const EstimatorNet& net, const std::string& path) { save_weights(net.mlp, path); }

EncoderNet load_encoder(const std::string& path) {
  Mlp net = load_weights(path);
  check_architecture(net, kEncoderWidths, kEncoderActs, "encoder");
  return EncoderNet{std::move(net)};
}

EstimatorNet load_estimator(const std::string& path) {
  Mlp net = load_weights(path);
  check_architecture(net, kEstimatorWidths, kEstimatorActs, "estimator");
  return EstimatorNet{std::move(net)};
}

std::uint64_t weights_hash(const Mlp& net) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const void* bytes, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < n; ++i) h = (h ^ p[i]) * 0x100000001b3ull;
  };
  for (const DenseLayer& l : net.layers) {
    const std::uint64_t dims[2] = {l.W.rows(), l.W.cols()};
    mix(dims, sizeof(dims));
    mix(l.W.data(), l.W.size() * sizeof(double));
    mix(l.b.data(), l.b.size() * sizeof(double));
  }
  return h;
}

std::vector<ParamRef> param_refs(Mlp& net) {
  std::vector<ParamRef> refs;
  for (DenseLayer& l : net.layers) {
    refs.push_back({l.W.data(), l.W.size()});
    refs.push_back({l.b.data(), l.b.size()});
  }
  return refs;
}

std::vector<ParamRef> grad_refs(MlpGrads& grads) {
  std::vector<ParamRef> refs;
  for (std::size_t l = 0; l < grads.dW.size(); ++l) {
    refs.push_back({grads.dW[l].data(), grads.dW[l].size()});
    refs.push_back({grads.db[l].data(), grads.db[l].size()});
  }
  return refs;
}

}  // namespace trinorm
