#include "trinorm/kernels.hpp"

#include <atomic>

namespace trinorm::kernels {

bool avx2_supported() {
#if defined(TRINORM_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

std::atomic<const Ops*> g_ops{nullptr};
std::atomic<Backend> g_backend{Backend::scalar};

const Ops* table_for(Backend b) {
#if defined(TRINORM_HAVE_AVX2)
  if (b == Backend::avx2) return &avx2_ops();
#else
  (void)b;
#endif
  return &scalar_ops();
}

void ensure_init() {
  if (g_ops.load(std::memory_order_acquire) != nullptr) return;
  const Backend b = avx2_supported() ? Backend::avx2 : Backend::scalar;
  g_backend.store(b);
  g_ops.store(table_for(b), std::memory_order_release);
}

}  // namespace

Backend set_backend(Backend b) {
  if (b == Backend::avx2 && !avx2_supported()) b = Backend::scalar;
  g_backend.store(b);
  g_ops.store(table_for(b), std::memory_order_release);
  return b;
}

Backend active_backend() {
  ensure_init();
  return g_backend.load();
}

const Ops& ops() {
  ensure_init();
  return *g_ops.load(std::memory_order_acquire);
}

}  // namespace trinorm::kernels
