#ifndef FEX_REDUCE_HPP
#define FEX_REDUCE_HPP

#include <cstddef>

namespace fex {

// Fixed-order pairwise summation. The split points depend only on n, so the
// result is bit-identical no matter how the inputs were produced (in
// particular, independent of the number of threads that filled the array).
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

// Pairwise-sums n rows of width w into out[0..w).
inline void pairwise_sum_rows(const double* rows, std::size_t n, std::size_t w,
                              double* out, double* scratch) {
  // scratch holds one column of length n
  for (std::size_t j = 0; j < w; ++j) {
    for (std::size_t i = 0; i < n; ++i) scratch[i] = rows[i * w + j];
    out[j] = pairwise_sum(scratch, n);
  }
}

}  // namespace fex

#endif
