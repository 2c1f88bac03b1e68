#pragma once

// Dense storage for the convolution kernel k(s,tau) sampled on the
// (2N-1) x N product grid. The kernel is supported on the parallelogram
//   P = { 0 <= tau <= 1,  tau <= s <= tau + 1 },
// which in index terms is  k <= m <= k + (N-1)  for row m (s_m) and
// column k (tau_k); entries outside P are kept at zero.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "autoconv/signal.hpp"

namespace autoconv {

struct KernelGrid {
  std::size_t grid_count = 0;  // N = node count of the X grid
  std::vector<cx> values;      // (2N-1) x N, row-major; row m <-> s_m, column k <-> tau_k

  KernelGrid() = default;
  explicit KernelGrid(std::size_t n) : grid_count(n), values((2 * n - 1) * n, cx(0.0, 0.0)) {
    detail::require(n >= 2, "KernelGrid: need N >= 2");
  }

  std::size_t rows() const { return 2 * grid_count - 1; }
  std::size_t cols() const { return grid_count; }

  cx& at(std::size_t m, std::size_t k) { return values[m * grid_count + k]; }
  const cx& at(std::size_t m, std::size_t k) const { return values[m * grid_count + k]; }

  // Index test for membership in the support parallelogram P.
  bool in_support(std::size_t m, std::size_t k) const {
    return k < grid_count && m >= k && m <= k + (grid_count - 1);
  }
};

// Returns (k(s,tau) + k(s,s-tau)) / 2 on the grid. The mirror point s - tau
// is the X node with index m - k, so no interpolation is involved. Entries
// outside P are forced to zero. Idempotent.
inline KernelGrid symmetrize_kernel(const KernelGrid& k) {
  KernelGrid out(k.grid_count);
  const std::size_t n = k.grid_count;
  for (std::size_t m = 0; m < k.rows(); ++m) {
    const std::size_t lo = m >= n - 1 ? m - (n - 1) : 0;
    const std::size_t hi = std::min(m, n - 1);
    for (std::size_t kk = lo; kk <= hi; ++kk) {
      out.at(m, kk) = 0.5 * (k.at(m, kk) + k.at(m, m - kk));
    }
  }
  return out;
}

// max |k(s,tau)| over the support parallelogram.
inline double kernel_sup(const KernelGrid& k) {
  double best = 0.0;
  const std::size_t n = k.grid_count;
  for (std::size_t m = 0; m < k.rows(); ++m) {
    const std::size_t lo = m >= n - 1 ? m - (n - 1) : 0;
    const std::size_t hi = std::min(m, n - 1);
    for (std::size_t kk = lo; kk <= hi; ++kk) {
      best = std::max(best, std::abs(k.at(m, kk)));
    }
  }
  return best;
}

}  // namespace autoconv
