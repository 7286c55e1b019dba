#pragma once

#include <cstddef>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sfl::par {

// Whether the OpenMP code path is compiled in.
inline constexpr bool kHaveOpenMP =
#ifdef _OPENMP
    true;
#else
    false;
#endif

// Parallel loop over [0, n). Each index must be independent of the others.
// With force_serial=true (or without OpenMP) this is a plain loop — the serial
// reference implementation used by tests and the kernel benchmark.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, bool force_serial = false) {
#ifdef _OPENMP
  if (!force_serial) {
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
      fn(static_cast<std::size_t>(i));
    return;
  }
#else
  (void)force_serial;
#endif
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

// Parallel loop over the upper triangle {(i,j) : 0 <= i <= j < n}, flattened so
// work is balanced. Used for Gram matrices and pairwise commutator sweeps.
template <class Fn>
void parallel_for_upper(std::size_t n, Fn&& fn, bool force_serial = false) {
  const std::size_t total = n * (n + 1) / 2;
  parallel_for(
      total,
      [&](std::size_t t) {
        // Invert t = i*n - i*(i-1)/2 + (j - i) by scanning rows; n is small
        // enough (basis sizes) that the linear scan is irrelevant.
        std::size_t i = 0, acc = 0;
        while (acc + (n - i) <= t) {
          acc += n - i;
          ++i;
        }
        std::size_t j = i + (t - acc);
        fn(i, j);
      },
      force_serial);
}

}  // namespace sfl::par
