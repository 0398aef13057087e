#pragma once

#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace divbar {

/// Worker count for parallel regions; the DIVBAR_THREADS environment
/// variable caps it (useful for benchmarking and reproducing serial runs).
inline int worker_count() {
#ifdef _OPENMP
    if (const char* s = std::getenv("DIVBAR_THREADS")) {
        const int n = std::atoi(s);
        if (n > 0) return n;
    }
    return omp_get_max_threads();
#else
    return 1;
#endif
}

} // namespace divbar
