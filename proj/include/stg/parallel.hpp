#pragma once

// Every data-parallel kernel in the library comes in two flavours selected by
// Exec: a plain serial loop (the reference) and an OpenMP loop. Both write to
// per-index slots or fixed-size chunk partials, so their results are
// bit-identical regardless of thread count.

#include <cstddef>

#ifdef STG_HAS_OPENMP
#include <omp.h>
#endif

#define STG_PRAGMA(x) _Pragma(#x)
#ifdef STG_HAS_OPENMP
#define STG_OMP_FOR_IF(cond) STG_PRAGMA(omp parallel for schedule(dynamic, 16) if(cond))
#define STG_OMP_FOR_STATIC_IF(cond) STG_PRAGMA(omp parallel for schedule(static) if(cond))
#else
#define STG_OMP_FOR_IF(cond)
#define STG_OMP_FOR_STATIC_IF(cond)
#endif

namespace stg {

enum class Exec { serial, parallel };

inline constexpr bool is_parallel(Exec e) { return e == Exec::parallel; }

/// Chunk length for deterministic reductions: partial sums are formed over
/// fixed ranges of this size and combined in index order.
inline constexpr std::size_t kReduceChunk = 256;

inline void set_num_threads(int n) {
#ifdef STG_HAS_OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

inline int max_threads() {
#ifdef STG_HAS_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace stg
