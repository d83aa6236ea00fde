#include "trinorm/common.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace trinorm {

namespace {
std::atomic<unsigned> g_threads{1};
}

void set_thread_count(unsigned n) { g_threads.store(n == 0 ? std::max(1u, std::thread::hardware_concurrency()) : n); }

unsigned thread_count() { return g_threads.load(); }

namespace detail {

void parallel_for_impl(std::size_t n, void* ctx, void (*body)(void*, std::size_t, std::size_t)) {
  const unsigned workers = std::min<std::size_t>(thread_count(), n);
  if (workers <= 1 || n < 2) {
    if (n > 0) body(ctx, 0, n);
    return;
  }
  // Static contiguous partition: chunk boundaries depend only on (n, workers).
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t base = n / workers;
  const std::size_t rem = n % workers;
  std::size_t begin = 0;
  for (unsigned t = 0; t < workers; ++t) {
    const std::size_t len = base + (t < rem ? 1 : 0);
    const std::size_t end = begin + len;
    pool.emplace_back([=] { if (begin < end) body(ctx, begin, end); });
    begin = end;
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail
}  // namespace trinorm
