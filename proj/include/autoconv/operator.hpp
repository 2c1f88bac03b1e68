#pragma once

// The discretized kernel-based autoconvolution operator
//
//   [F(f)](s) = \int_{max(s-1,0)}^{min(s,1)} k(s,tau) f(s-tau) f(tau) dtau,
//
// its derivative  [F'(f)h](s) = 2 \int k(s,tau) f(s-tau) h(tau) dtau, and the
// adjoint of the derivative. All three use the composite trapezoidal rule on
// the shared grid; the integration endpoints max(s-1,0) and min(s,1) are grid
// nodes by construction, so no endpoint interpolation occurs.
//
// The adjoint is the exact conjugate transpose of the discrete derivative with
// respect to the weighted inner products on the X and Y grids (not a separate
// discretization of the continuum adjoint formula), which makes the discrete
// adjoint identity hold to machine precision. The two differ by O(1/N)
// boundary terms.

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "autoconv/kernel.hpp"
#include "autoconv/parallel.hpp"
#include "autoconv/signal.hpp"

namespace autoconv {

namespace detail {

inline void check_x_signal(const KernelGrid& k, const ComplexSignal& f, const char* who) {
  require(f.grid == x_grid(k.grid_count),
          std::string(who) + ": signal grid does not match kernel size");
}

// Trapezoid weight of column kk within row m of the support parallelogram;
// zero for degenerate rows (m = 0 and m = 2N-2, where the interval has zero
// width) and outside the support.
inline double row_weight(std::size_t n, std::size_t m, std::size_t kk) {
  const std::size_t lo = m >= n - 1 ? m - (n - 1) : 0;
  const std::size_t hi = std::min(m, n - 1);
  if (hi <= lo || kk < lo || kk > hi) return 0.0;
  return (kk == lo || kk == hi) ? 0.5 : 1.0;
}

}  // namespace detail

inline ComplexSignal forward(const KernelGrid& k, const ComplexSignal& f) {
  detail::check_x_signal(k, f, "forward");
  const std::size_t n = k.grid_count;
  const double h = f.grid.spacing();
  ComplexSignal out(y_grid(n));
  detail::parallel_for(out.grid.count, [&](std::size_t m) {
    const std::size_t lo = m >= n - 1 ? m - (n - 1) : 0;
    const std::size_t hi = std::min(m, n - 1);
    if (hi <= lo) {
      out.values[m] = cx(0.0, 0.0);
      return;
    }
    cx acc = 0.5 * (k.at(m, lo) * f.values[m - lo] * f.values[lo] +
                    k.at(m, hi) * f.values[m - hi] * f.values[hi]);
    for (std::size_t kk = lo + 1; kk < hi; ++kk) {
      acc += k.at(m, kk) * f.values[m - kk] * f.values[kk];
    }
    out.values[m] = h * acc;
  });
  return out;
}

// Derivative of F at f applied to h; linear in h, same quadrature as forward.
inline ComplexSignal frechet_apply(const KernelGrid& k, const ComplexSignal& f,
                                   const ComplexSignal& h) {
  detail::check_x_signal(k, f, "frechet_apply");
  detail::require(f.grid == h.grid, "frechet_apply: f and h live on different grids");
  const std::size_t n = k.grid_count;
  const double step = f.grid.spacing();
  ComplexSignal out(y_grid(n));
  detail::parallel_for(out.grid.count, [&](std::size_t m) {
    const std::size_t lo = m >= n - 1 ? m - (n - 1) : 0;
    const std::size_t hi = std::min(m, n - 1);
    if (hi <= lo) {
      out.values[m] = cx(0.0, 0.0);
      return;
    }
    cx acc = 0.5 * (k.at(m, lo) * f.values[m - lo] * h.values[lo] +
                    k.at(m, hi) * f.values[m - hi] * h.values[hi]);
    for (std::size_t kk = lo + 1; kk < hi; ++kk) {
      acc += k.at(m, kk) * f.values[m - kk] * h.values[kk];
    }
    out.values[m] = 2.0 * step * acc;
  });
  return out;
}

// Adjoint of frechet_apply(k, f, .) with respect to the trapezoid-weighted
// inner products: <F'(f)h, r>_Y = <h, F'(f)* r>_X exactly in floating point
// terms of the assembled matrices.
inline ComplexSignal frechet_adjoint_apply(const KernelGrid& k, const ComplexSignal& f,
                                           const ComplexSignal& r) {
  detail::check_x_signal(k, f, "frechet_adjoint_apply");
  detail::require(r.grid == y_grid(k.grid_count),
                  "frechet_adjoint_apply: residual grid does not match kernel size");
  const std::size_t n = k.grid_count;
  const double step = f.grid.spacing();
  ComplexSignal out(x_grid(n));
  detail::parallel_for(n, [&](std::size_t kk) {
    const double wx = out.grid.trapezoid_weight(kk);
    cx acc(0.0, 0.0);
    for (std::size_t m = kk; m <= kk + (n - 1); ++m) {
      const double wf = detail::row_weight(n, m, kk);
      if (wf == 0.0) continue;
      const double wy = r.grid.trapezoid_weight(m);
      acc += (wy * wf) * std::conj(k.at(m, kk) * f.values[m - kk]) * r.values[m];
    }
    out.values[kk] = (2.0 * step / wx) * acc;
  });
  return out;
}

}  // namespace autoconv
