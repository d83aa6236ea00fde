#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace trinorm {

// I/O and format problems (missing files, malformed lines, bad magic bytes).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Semantically invalid data (shape mismatches, bad arguments, broken invariants).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure (non-finite loss, unstable network output).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Worker threads used by parallel_for. 1 = strictly serial. Parallel runs are
// bit-identical to serial ones by construction (fixed work partitioning,
// deterministic reduction order), so this only affects speed.
void set_thread_count(unsigned n);
unsigned thread_count();

namespace detail {
void parallel_for_impl(std::size_t n, void* ctx, void (*body)(void*, std::size_t, std::size_t));
}

// Calls f(begin, end) over disjoint chunks covering [0, n).
template <typename F>
void parallel_for_chunks(std::size_t n, F&& f) {
  detail::parallel_for_impl(n, &f, [](void* ctx, std::size_t b, std::size_t e) {
    (*static_cast<F*>(ctx))(b, e);
  });
}

// Calls f(i) for every i in [0, n), distributed over worker threads.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
  parallel_for_chunks(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) f(i);
  });
}

}  // namespace trinorm
