#pragma once

// Data-parallel inner loops behind the spatial index, the networks, and the
// optimizer. Each kernel has a scalar reference implementation and an AVX2
// variant; the active backend is chosen once at runtime (CPUID) and can be
// forced for testing.
//
// FP contract per kernel family:
//   - sq_dist_batch, relu_backward_mask, max_pool, sgd_update: no FMA, no
//     reassociation — scalar and AVX2 results are bit-identical.
//   - dense_forward / dense_backward_data / dense_grad_accum / dot / axpy:
//     the AVX2 path may use FMA and lane-wise partial sums; results agree
//     with scalar to ~1e-12 relative (equivalence-tested).
// Whatever the backend, every kernel is deterministic for fixed inputs.

#include <cstddef>
#include <cstdint>

namespace trinorm::kernels {

enum class Backend { scalar, avx2 };

struct Ops {
  // Y[r, o] = sum_i W[o, i] * X[r, i] + b[o], optionally relu-clamped.
  // W is row-major out*in, X row-major rows*in, Y row-major rows*out.
  // relu maps non-positive pre-activations to +0.0 (never -0.0).
  void (*dense_forward)(const double* W, const double* b, const double* X, double* Y,
                        std::size_t rows, std::size_t in, std::size_t out, bool relu);
  // dX[r, i] = sum_o dY[r, o] * W[o, i]. dX is overwritten.
  void (*dense_backward_data)(const double* W, const double* dY, double* dX,
                              std::size_t rows, std::size_t in, std::size_t out);
  // dW[o, i] += sum_r dY[r, o] * X[r, i];  db[o] += sum_r dY[r, o].
  void (*dense_grad_accum)(const double* X, const double* dY, double* dW, double* db,
                           std::size_t rows, std::size_t in, std::size_t out);
  // g[i] = y[i] > 0 ? g[i] : 0, where y is the cached relu output.
  void (*relu_backward_mask)(const double* y, double* g, std::size_t n);
  // out[c] = max_r F[r, c]; argmax[c] = first row attaining it.
  void (*max_pool)(const double* F, std::size_t rows, std::size_t cols,
                   double* out, std::uint32_t* argmax);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y[i] += x[i]
  void (*add_inplace)(const double* x, double* y, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  // out[j] = (xs[j]-cx)^2 + (ys[j]-cy)^2 + (zs[j]-cz)^2, association fixed as
  // ((dx*dx + dy*dy) + dz*dz).
  void (*sq_dist_batch)(const double* xs, const double* ys, const double* zs, std::size_t n,
                        double cx, double cy, double cz, double* out);
  // v = momentum*v + g;  p = p - lr*v
  void (*sgd_update)(double* p, double* v, const double* g, std::size_t n,
                     double lr, double momentum);
};

const Ops& scalar_ops();
#if defined(TRINORM_HAVE_AVX2)
const Ops& avx2_ops();
#endif

bool avx2_supported();

// Select a backend. Backend::avx2 on a machine without AVX2 falls back to
// scalar. Returns the backend actually in effect.
Backend set_backend(Backend b);
Backend active_backend();

// The dispatch table in effect (auto-detected on first use).
const Ops& ops();

}  // namespace trinorm::kernels
