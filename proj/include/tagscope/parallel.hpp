#pragma once

// Data-parallel loop over independent items with a serial reference path.
//
// parallel_for(n, threads, fn) calls fn(i) for i in [0, n). threads == 1 runs
// the plain serial loop (the reference implementation used to validate the
// parallel path); any other value uses OpenMP when available. Callers must
// make fn(i) independent of execution order and merge results in a fixed
// order afterwards, so both paths produce identical output.

#ifdef _OPENMP
#include <omp.h>
#endif

#include <exception>
#include <mutex>

namespace tagscope {

inline int effective_threads(int requested) {
#ifdef _OPENMP
  if (requested <= 0) return omp_get_max_threads();
  return requested;
#else
  (void)requested;
  return 1;
#endif
}

template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  threads = effective_threads(threads);
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
#ifdef _OPENMP
  std::exception_ptr error;
  std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
#else
  for (int i = 0; i < n; ++i) fn(i);
#endif
}

}  // namespace tagscope
