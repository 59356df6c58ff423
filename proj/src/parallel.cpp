#include "eqgrid/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace eqgrid {

int max_threads() {
#ifdef _OPENMP
    int n = omp_get_max_threads();
#else
    int n = 1;
#endif
    if (const char* env = std::getenv("EQGRID_THREADS")) {
        try {
            const int cap = std::stoi(env);
            if (cap >= 1 && cap < n) n = cap;
        } catch (...) {
            // ignore unparsable values; fall back to the OpenMP default
        }
    }
    return n;
}

namespace detail {

void run_parallel(std::size_t n, void (*trampoline)(void*, std::size_t), void* ctx) {
    const int threads = max_threads();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(threads)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        trampoline(ctx, static_cast<std::size_t>(i));
    }
#else
    (void)threads;
    for (std::size_t i = 0; i < n; ++i) trampoline(ctx, i);
#endif
}

}  // namespace detail
}  // namespace eqgrid
