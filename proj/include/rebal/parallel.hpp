#pragma once

#include <omp.h>

#include <algorithm>
#include <cstdlib>

namespace rebal {

/// Threads for parallel kernels: OpenMP's default, capped by REBAL_THREADS.
inline int thread_budget() {
  int n = omp_get_max_threads();
  if (const char* env = std::getenv("REBAL_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return std::max(n, 1);
}

}  // namespace rebal
