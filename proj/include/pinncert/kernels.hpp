#pragma once

#include <algorithm>
#include <cstring>
#include <functional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pinncert {

// Work is cut into fixed-size blocks; each block fills its own partial
// accumulator, and the partials are folded in block index order. The fold
// never depends on the thread count, so parallel runs of any width produce
// bitwise the same result as the serial reference.

inline constexpr std::size_t kReduceBlock = 64;

// worker(begin, end, acc) accumulates items [begin, end) into acc, which
// arrives zeroed and holds nacc doubles. out receives the folded sums.
using BlockWorker = std::function<void(std::size_t, std::size_t, double*)>;

namespace detail {

inline void fill_blocks(std::size_t n, std::size_t block, int nacc,
                        std::vector<double>& partials, const BlockWorker& worker,
                        bool parallel) {
  const std::size_t nblocks = (n + block - 1) / block;
  partials.assign(nblocks * static_cast<std::size_t>(nacc), 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (long long bi = 0; bi < static_cast<long long>(nblocks); ++bi) {
    const std::size_t b = static_cast<std::size_t>(bi);
    const std::size_t begin = b * block;
    worker(begin, std::min(begin + block, n),
           partials.data() + b * static_cast<std::size_t>(nacc));
  }
  (void)parallel;
}

inline void fold_sum(std::size_t n, std::size_t block, int nacc,
                     const std::vector<double>& partials, double* out) {
  const std::size_t nblocks = (n + block - 1) / block;
  std::memset(out, 0, sizeof(double) * static_cast<std::size_t>(nacc));
  for (std::size_t b = 0; b < nblocks; ++b)
    for (int k = 0; k < nacc; ++k)
      out[k] += partials[b * static_cast<std::size_t>(nacc) + static_cast<std::size_t>(k)];
}

inline void fold_max(std::size_t n, std::size_t block, int nacc,
                     const std::vector<double>& partials, double* out) {
  const std::size_t nblocks = (n + block - 1) / block;
  std::memset(out, 0, sizeof(double) * static_cast<std::size_t>(nacc));
  for (std::size_t b = 0; b < nblocks; ++b)
    for (int k = 0; k < nacc; ++k)
      out[k] = std::max(
          out[k], partials[b * static_cast<std::size_t>(nacc) + static_cast<std::size_t>(k)]);
}

}  // namespace detail

inline void blocked_sum(std::size_t n, int nacc, double* out, const BlockWorker& worker,
                        std::size_t block = kReduceBlock) {
  std::vector<double> partials;
  detail::fill_blocks(n, block, nacc, partials, worker, true);
  detail::fold_sum(n, block, nacc, partials, out);
}

inline void blocked_sum_serial(std::size_t n, int nacc, double* out, const BlockWorker& worker,
                               std::size_t block = kReduceBlock) {
  std::vector<double> partials;
  detail::fill_blocks(n, block, nacc, partials, worker, false);
  detail::fold_sum(n, block, nacc, partials, out);
}

inline void blocked_max(std::size_t n, int nacc, double* out, const BlockWorker& worker,
                        std::size_t block = kReduceBlock) {
  std::vector<double> partials;
  detail::fill_blocks(n, block, nacc, partials, worker, true);
  detail::fold_max(n, block, nacc, partials, out);
}

inline void blocked_max_serial(std::size_t n, int nacc, double* out, const BlockWorker& worker,
                               std::size_t block = kReduceBlock) {
  std::vector<double> partials;
  detail::fill_blocks(n, block, nacc, partials, worker, false);
  detail::fold_max(n, block, nacc, partials, out);
}

}  // namespace pinncert
