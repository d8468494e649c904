#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ftb {

// Sweep-level parallelism. Every parallel loop writes into per-index slots and
// reduces serially afterwards, so results are identical for any worker count.
// The serial path is kept as a reference implementation for tests and the
// kernel benchmark.
enum class ExecMode { serial, openmp };

inline ExecMode& default_exec_mode() {
  static ExecMode mode = ExecMode::openmp;
  return mode;
}

inline void set_thread_count(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

template <typename Body>
void serial_for(std::size_t n, Body&& body) {
  for (std::size_t i = 0; i < n; ++i) body(i);
}

template <typename Body>
void parallel_for(std::size_t n, Body&& body, ExecMode mode = default_exec_mode()) {
#ifdef _OPENMP
  if (mode == ExecMode::openmp) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) body(static_cast<std::size_t>(i));
    return;
  }
#endif
  serial_for(n, body);
}

}  // namespace ftb
