// AVX2 kernel variants. This translation unit is compiled with -mavx2 -mfma
// and is only reachable after the runtime CPUID check in the dispatcher.
//
// sq_dist_batch, relu_backward_mask, max_pool and sgd_update keep the scalar
// association (no FMA) and are bit-identical to the reference kernels; the
// dense/dot/axpy kernels use FMA and lane-wise partial sums.

#include "trinorm/kernels.hpp"

#if defined(TRINORM_HAVE_AVX2)

#include <immintrin.h>

namespace trinorm::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

inline double dot_avx2_raw(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

// Same accumulation chain per row as the 4-row blocked forward path, so a
// row's features never depend on its position within the patch.
inline double dot_row_order(const double* w, const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(x + i), acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * x[i];
  return s;
}

void dense_forward_avx2(const double* W, const double* b, const double* X, double* Y,
                        std::size_t rows, std::size_t in, std::size_t out, bool relu) {
  // Rows blocked by 4 so each W row is loaded once per block.
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    const double* x0 = X + (r + 0) * in;
    const double* x1 = X + (r + 1) * in;
    const double* x2 = X + (r + 2) * in;
    const double* x3 = X + (r + 3) * in;
    for (std::size_t o = 0; o < out; ++o) {
      const double* w = W + o * in;
      __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
      __m256d a2 = _mm256_setzero_pd(), a3 = _mm256_setzero_pd();
      std::size_t i = 0;
      for (; i + 4 <= in; i += 4) {
        const __m256d wv = _mm256_loadu_pd(w + i);
        a0 = _mm256_fmadd_pd(wv, _mm256_loadu_pd(x0 + i), a0);
        a1 = _mm256_fmadd_pd(wv, _mm256_loadu_pd(x1 + i), a1);
        a2 = _mm256_fmadd_pd(wv, _mm256_loadu_pd(x2 + i), a2);
        a3 = _mm256_fmadd_pd(wv, _mm256_loadu_pd(x3 + i), a3);
      }
      double s0 = hsum(a0), s1 = hsum(a1), s2 = hsum(a2), s3 = hsum(a3);
      for (; i < in; ++i) {
        s0 += w[i] * x0[i];
        s1 += w[i] * x1[i];
        s2 += w[i] * x2[i];
        s3 += w[i] * x3[i];
      }
      s0 += b[o]; s1 += b[o]; s2 += b[o]; s3 += b[o];
      if (relu) {
        s0 = s0 > 0.0 ? s0 : 0.0;
        s1 = s1 > 0.0 ? s1 : 0.0;
        s2 = s2 > 0.0 ? s2 : 0.0;
        s3 = s3 > 0.0 ? s3 : 0.0;
      }
      Y[(r + 0) * out + o] = s0;
      Y[(r + 1) * out + o] = s1;
      Y[(r + 2) * out + o] = s2;
      Y[(r + 3) * out + o] = s3;
    }
  }
  for (; r < rows; ++r) {
    const double* x = X + r * in;
    double* y = Y + r * out;
    for (std::size_t o = 0; o < out; ++o) {
      double acc = dot_row_order(W + o * in, x, in) + b[o];
      y[o] = relu ? (acc > 0.0 ? acc : 0.0) : acc;
    }
  }
}

void dense_backward_data_avx2(const double* W, const double* dY, double* dX,
                              std::size_t rows, std::size_t in, std::size_t out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* dy = dY + r * out;
    double* dx = dX + r * in;
    std::size_t i = 0;
    for (; i + 4 <= in; i += 4) _mm256_storeu_pd(dx + i, _mm256_setzero_pd());
    for (; i < in; ++i) dx[i] = 0.0;
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dy[o];
      if (g == 0.0) continue;
      const double* w = W + o * in;
      const __m256d gv = _mm256_set1_pd(g);
      std::size_t j = 0;
      for (; j + 4 <= in; j += 4) {
        _mm256_storeu_pd(dx + j, _mm256_fmadd_pd(gv, _mm256_loadu_pd(w + j), _mm256_loadu_pd(dx + j)));
      }
      for (; j < in; ++j) dx[j] += g * w[j];
    }
  }
}

void dense_grad_accum_avx2(const double* X, const double* dY, double* dW, double* db,
                           std::size_t rows, std::size_t in, std::size_t out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = X + r * in;
    const double* dy = dY + r * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dy[o];
      if (g == 0.0) continue;
      double* w = dW + o * in;
      const __m256d gv = _mm256_set1_pd(g);
      std::size_t i = 0;
      for (; i + 4 <= in; i += 4) {
        _mm256_storeu_pd(w + i, _mm256_fmadd_pd(gv, _mm256_loadu_pd(x + i), _mm256_loadu_pd(w + i)));
      }
      for (; i < in; ++i) w[i] += g * x[i];
      db[o] += g;
    }
  }
}

void relu_backward_mask_avx2(const double* y, double* g, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(y + i), zero, _CMP_GT_OQ);
    _mm256_storeu_pd(g + i, _mm256_and_pd(_mm256_loadu_pd(g + i), mask));
  }
  for (; i < n; ++i) {
    if (!(y[i] > 0.0)) g[i] = 0.0;
  }
}

void max_pool_avx2(const double* F, std::size_t rows, std::size_t cols,
                   double* out, std::uint32_t* argmax) {
  std::size_t c = 0;
  for (; c + 4 <= cols; c += 4) {
    __m256d cur = _mm256_loadu_pd(F + c);
    __m256i idx = _mm256_setzero_si256();
    for (std::size_t r = 1; r < rows; ++r) {
      const __m256d v = _mm256_loadu_pd(F + r * cols + c);
      const __m256d gt = _mm256_cmp_pd(v, cur, _CMP_GT_OQ);
      cur = _mm256_blendv_pd(cur, v, gt);
      const __m256i rv = _mm256_set1_epi64x(static_cast<long long>(r));
      idx = _mm256_blendv_epi8(idx, rv, _mm256_castpd_si256(gt));
    }
    _mm256_storeu_pd(out + c, cur);
    alignas(32) long long lanes[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), idx);
    for (int l = 0; l < 4; ++l) argmax[c + l] = static_cast<std::uint32_t>(lanes[l]);
  }
  for (; c < cols; ++c) {
    double best = F[c];
    std::uint32_t bi = 0;
    for (std::size_t r = 1; r < rows; ++r) {
      const double v = F[r * cols + c];
      if (v > best) {
        best = v;
        bi = static_cast<std::uint32_t>(r);
      }
    }
    out[c] = best;
    argmax[c] = bi;
  }
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void add_inplace_avx2(const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += x[i];
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  return dot_avx2_raw(a, b, n);
}

void sq_dist_batch_avx2(const double* xs, const double* ys, const double* zs, std::size_t n,
                        double cx, double cy, double cz, double* out) {
  const __m256d cxv = _mm256_set1_pd(cx);
  const __m256d cyv = _mm256_set1_pd(cy);
  const __m256d czv = _mm256_set1_pd(cz);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + j), cxv);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + j), cyv);
    const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(zs + j), czv);
    const __m256d s = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)),
                                    _mm256_mul_pd(dz, dz));
    _mm256_storeu_pd(out + j, s);
  }
  for (; j < n; ++j) {
    const double dx = xs[j] - cx;
    const double dy = ys[j] - cy;
    const double dz = zs[j] - cz;
    out[j] = (dx * dx + dy * dy) + dz * dz;
  }
}

void sgd_update_avx2(double* p, double* v, const double* g, std::size_t n,
                     double lr, double momentum) {
  const __m256d mv = _mm256_set1_pd(momentum);
  const __m256d lv = _mm256_set1_pd(lr);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vel = _mm256_add_pd(_mm256_mul_pd(mv, _mm256_loadu_pd(v + i)), _mm256_loadu_pd(g + i));
    _mm256_storeu_pd(v + i, vel);
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), _mm256_mul_pd(lv, vel)));
  }
  for (; i < n; ++i) {
    v[i] = momentum * v[i] + g[i];
    p[i] = p[i] - lr * v[i];
  }
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops table{
      dense_forward_avx2,  dense_backward_data_avx2, dense_grad_accum_avx2,
      relu_backward_mask_avx2, max_pool_avx2,        axpy_avx2,
      add_inplace_avx2,    dot_avx2,                 sq_dist_batch_avx2,
      sgd_update_avx2,
  };
  return table;
}

}  // namespace trinorm::kernels

#endif  // TRINORM_HAVE_AVX2
