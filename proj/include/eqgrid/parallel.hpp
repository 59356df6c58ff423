// OpenMP helpers. Parallel loops assign each index to exactly one worker and
// never share accumulators, so results are bit-identical for any thread
// count (including 1). EQGRID_THREADS caps the worker pool.
#ifndef EQGRID_PARALLEL_HPP
#define EQGRID_PARALLEL_HPP

#include <cstddef>

namespace eqgrid {

// min(omp_get_max_threads(), EQGRID_THREADS); 1 when OpenMP is unavailable.
int max_threads();

// Serial reference loop, kept for testing parallel kernels against.
template <typename F>
void serial_for(std::size_t n, F&& body) {
    for (std::size_t i = 0; i < n; ++i) body(i);
}

namespace detail {
void run_parallel(std::size_t n, void (*trampoline)(void*, std::size_t), void* ctx);
}

template <typename F>
void parallel_for(std::size_t n, F&& body) {
    auto trampoline = [](void* ctx, std::size_t i) { (*static_cast<F*>(ctx))(i); };
    detail::run_parallel(n, trampoline, &body);
}

}  // namespace eqgrid

#endif
