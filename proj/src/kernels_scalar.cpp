// Reference kernels. Plain loops, fixed accumulation order; the AVX2 variants
// are validated against these.

#include "trinorm/kernels.hpp"

namespace trinorm::kernels {
namespace {

void dense_forward_scalar(const double* W, const double* b, const double* X, double* Y,
                          std::size_t rows, std::size_t in, std::size_t out, bool relu) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = X + r * in;
    double* y = Y + r * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double* w = W + o * in;
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i) acc += w[i] * x[i];
      acc += b[o];
      y[o] = relu ? (acc > 0.0 ? acc : 0.0) : acc;
    }
  }
}

void dense_backward_data_scalar(const double* W, const double* dY, double* dX,
                                std::size_t rows, std::size_t in, std::size_t out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* dy = dY + r * out;
    double* dx = dX + r * in;
    for (std::size_t i = 0; i < in; ++i) dx[i] = 0.0;
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dy[o];
      if (g == 0.0) continue;
      const double* w = W + o * in;
      for (std::size_t i = 0; i < in; ++i) dx[i] += g * w[i];
    }
  }
}

void dense_grad_accum_scalar(const double* X, const double* dY, double* dW, double* db,
                             std::size_t rows, std::size_t in, std::size_t out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = X + r * in;
    const double* dy = dY + r * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dy[o];
      if (g == 0.0) continue;
      double* w = dW + o * in;
      for (std::size_t i = 0; i < in; ++i) w[i] += g * x[i];
      db[o] += g;
    }
  }
}

void relu_backward_mask_scalar(const double* y, double* g, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!(y[i] > 0.0)) g[i] = 0.0;
  }
}

void max_pool_scalar(const double* F, std::size_t rows, std::size_t cols,
                     double* out, std::uint32_t* argmax) {
  for (std::size_t c = 0; c < cols; ++c) {
    out[c] = F[c];
    argmax[c] = 0;
  }
  for (std::size_t r = 1; r < rows; ++r) {
    const double* f = F + r * cols;
    for (std::size_t c = 0; c < cols; ++c) {
      if (f[c] > out[c]) {
        out[c] = f[c];
        argmax[c] = static_cast<std::uint32_t>(r);
      }
    }
  }
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void add_inplace_scalar(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void sq_dist_batch_scalar(const double* xs, const double* ys, const double* zs, std::size_t n,
                          double cx, double cy, double cz, double* out) {
  for (std::size_t j = 0; j < n; ++j) {
    const double dx = xs[j] - cx;
    const double dy = ys[j] - cy;
    const double dz = zs[j] - cz;
    out[j] = (dx * dx + dy * dy) + dz * dz;
  }
}

void sgd_update_scalar(double* p, double* v, const double* g, std::size_t n,
                       double lr, double momentum) {
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = momentum * v[i] + g[i];
    p[i] = p[i] - lr * v[i];
  }
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops table{
      dense_forward_scalar,  dense_backward_data_scalar, dense_grad_accum_scalar,
      relu_backward_mask_scalar, max_pool_scalar,        axpy_scalar,
      add_inplace_scalar,    dot_scalar,                 sq_dist_batch_scalar,
      sgd_update_scalar,
  };
  return table;
}

}  // namespace trinorm::kernels
