#pragma once

// Planar NURBS curves with complex control points P_j = u_j + i v_j and
// positive weights w_j over an open knot vector: Cox-de Boor basis evaluation,
// curve synthesis gamma[x], and analytic derivatives with respect to the
// design parameters x = (u, v, w) in R^{3n}.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "autoconv/signal.hpp"

namespace autoconv {

// Open knot vector normalized to the parameter interval [0,1]:
// the first p+1 knots are 0, the last p+1 knots are 1.
struct KnotVector {
  std::vector<double> knots;  // length n + p + 1
  std::size_t degree = 0;

  KnotVector() = default;
  KnotVector(std::vector<double> knots_, std::size_t degree_)
      : knots(std::move(knots_)), degree(degree_) {
    detail::require(knots.size() >= 2 * (degree + 1), "KnotVector: too few knots");
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
      detail::require(knots[i] <= knots[i + 1], "KnotVector: knots must be non-decreasing");
    }
    for (std::size_t i = 0; i <= degree; ++i) {
      detail::require(knots[i] == 0.0, "KnotVector: open form requires leading zeros");
      detail::require(knots[knots.size() - 1 - i] == 1.0,
                      "KnotVector: open form requires trailing ones");
    }
  }

  std::size_t control_count() const { return knots.size() - degree - 1; }
};

// Open uniform knots: p+1 zeros, interior knots (j-p-1)/(n-p) for
// p+2 <= j <= n (1-based), p+1 ones.
inline KnotVector open_uniform_knots(std::size_t n, std::size_t p) {
  detail::require(n >= p + 1, "open_uniform_knots: need n >= p+1 control points");
  std::vector<double> e(n + p + 1);
  for (std::size_t i = 0; i <= p; ++i) e[i] = 0.0;
  for (std::size_t j = p + 2; j <= n; ++j) {
    e[j - 1] = static_cast<double>(j - p - 1) / static_cast<double>(n - p);
  }
  for (std::size_t i = n; i <= n + p; ++i) e[i] = 1.0;
  return KnotVector(std::move(e), p);
}

// All n B-spline basis values N_{j,p}(t) by the Cox-de Boor recursion with
// the convention 0/0 := 0. The half-open degree-0 indicators would make every
// basis function vanish at t = 1; the last nonempty span is treated as closed
// on the right instead, so that N_{n,p}(1) = 1.
inline std::vector<double> bspline_basis(const KnotVector& kv, double t) {
  detail::require(t >= 0.0 && t <= 1.0, "bspline_basis: parameter outside [0,1]");
  const auto& e = kv.knots;
  const std::size_t p = kv.degree;
  const std::size_t n = kv.control_count();
  const std::size_t m = e.size() - 1;

  std::vector<double> cur(m, 0.0);
  if (t < e[m]) {
    for (std::size_t j = 0; j < m; ++j) cur[j] = (e[j] <= t && t < e[j + 1]) ? 1.0 : 0.0;
  } else {
    for (std::size_t j = m; j-- > 0;) {
      if (e[j] < e[j + 1]) {
        cur[j] = 1.0;
        break;
      }
    }
  }

  for (std::size_t q = 1; q <= p; ++q) {
    for (std::size_t j = 0; j + q < m; ++j) {
      double acc = 0.0;
      if (cur[j] != 0.0 && e[j + q] != e[j]) {
        acc += (t - e[j]) / (e[j + q] - e[j]) * cur[j];
      }
      if (cur[j + 1] != 0.0 && e[j + q + 1] != e[j + 1]) {
        acc += (e[j + q + 1] - t) / (e[j + q + 1] - e[j + 1]) * cur[j + 1];
      }
      cur[j] = acc;
    }
  }
  cur.resize(n);
  return cur;
}

// Design parameters of a NURBS curve: control point coordinates and weights.
struct NurbsDesign {
  std::vector<double> u;  // real parts of control points
  std::vector<double> v;  // imaginary parts
  std::vector<double> w;  // positive weights
  KnotVector knots;

  NurbsDesign() = default;
  NurbsDesign(std::vector<double> u_, std::vector<double> v_, std::vector<double> w_,
              KnotVector knots_)
      : u(std::move(u_)), v(std::move(v_)), w(std::move(w_)), knots(std::move(knots_)) {
    const std::size_t n = knots.control_count();
    detail::require(u.size() == n && v.size() == n && w.size() == n,
                    "NurbsDesign: parameter arrays must match the knot vector");
    detail::require(n >= knots.degree + 1, "NurbsDesign: need n >= p+1");
    for (double wj : w) detail::require(wj > 0.0, "NurbsDesign: weights must be positive");
  }

  std::size_t count() const { return u.size(); }
  cx point(std::size_t j) const { return cx(u[j], v[j]); }
};

// Rational basis R_{j,p}(t) = w_j N_{j,p}(t) / sum_l w_l N_{l,p}(t).
inline std::vector<double> rational_basis(const NurbsDesign& d, double t) {
  std::vector<double> base = bspline_basis(d.knots, t);
  double denom = 0.0;
  for (std::size_t j = 0; j < base.size(); ++j) denom += d.w[j] * base[j];
  detail::require(denom > 0.0, "rational_basis: zero denominator");
  for (std::size_t j = 0; j < base.size(); ++j) base[j] = d.w[j] * base[j] / denom;
  return base;
}

// B-spline basis values tabulated on a fixed grid over [0,1]. The knot vector
// and grid are constant during a solve, so this is computed once and shared by
// every curve and Jacobian evaluation.
struct BasisCache {
  std::size_t n = 0;           // number of basis functions
  SampleGrid grid;             // X grid
  std::vector<double> values;  // n x grid.count, row-major: values[j*count + i]

  BasisCache() = default;
  BasisCache(const KnotVector& kv, const SampleGrid& g) : n(kv.control_count()), grid(g) {
    detail::require(g.domain_length == 1.0, "BasisCache: NURBS curves live on [0,1]");
    values.resize(n * g.count);
    for (std::size_t i = 0; i < g.count; ++i) {
      const std::vector<double> b = bspline_basis(kv, g.node(i));
      for (std::size_t j = 0; j < n; ++j) values[j * g.count + i] = b[j];
    }
  }

  double basis(std::size_t j, std::size_t i) const { return values[j * grid.count + i]; }

  // denom[i] = sum_j w_j N_j(t_i)
  void denominator(const std::vector<double>& w, std::vector<double>& denom) const {
    denom.assign(grid.count, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double wj = w[j];
      const double* row = values.data() + j * grid.count;
      for (std::size_t i = 0; i < grid.count; ++i) denom[i] += wj * row[i];
    }
  }

  // curve[i] = sum_j (u_j + i v_j) R_j(t_i). The rational basis ratio is
  // formed before the control point enters, so at the interval ends (where a
  // single basis function equals one) the ratio is exactly w_j / w_j = 1 and
  // the curve interpolates the end control points bitwise.
  void curve(const std::vector<double>& u, const std::vector<double>& v,
             const std::vector<double>& w, const std::vector<double>& denom,
             std::vector<cx>& out) const {
    out.assign(grid.count, cx(0.0, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
      const cx pj(u[j], v[j]);
      const double wj = w[j];
      const double* row = values.data() + j * grid.count;
      for (std::size_t i = 0; i < grid.count; ++i) {
        const double nj = row[i];
        if (nj == 0.0) continue;
        out[i] += pj * ((wj * nj) / denom[i]);
      }
    }
  }

  // Directional derivative of the curve under (du, dv, dw):
  //   dgamma(t) = sum_j (du_j + i dv_j) R_j(t) + sum_j dw_j N_j(t) (P_j - gamma(t)) / denom(t)
  void jacobian_apply(const std::vector<double>& u, const std::vector<double>& v,
                      const std::vector<double>& w, const std::vector<double>& denom,
                      const std::vector<cx>& gamma, const double* du, const double* dv,
                      const double* dw, std::vector<cx>& out) const {
    out.assign(grid.count, cx(0.0, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
      const cx coef_uv = cx(du[j], dv[j]) * w[j];
      const cx pj(u[j], v[j]);
      const double* row = values.data() + j * grid.count;
      for (std::size_t i = 0; i < grid.count; ++i) {
        const double nj = row[i];
        if (nj == 0.0) continue;
        out[i] += nj * coef_uv + (dw[j] * nj) * (pj - gamma[i]);
      }
    }
    for (std::size_t i = 0; i < grid.count; ++i) out[i] /= denom[i];
  }

  // Transpose of jacobian_apply: fills g (length 3n) with
  //   g . d = Re <jacobian_apply(d), residual>_X  for every direction d.
  void jacobian_adjoint(const std::vector<double>& u, const std::vector<double>& v,
                        const std::vector<double>& w, const std::vector<double>& denom,
                        const std::vector<cx>& gamma, const std::vector<cx>& residual,
                        double* g) const {
    const double h = grid.spacing();
    for (std::size_t j = 0; j < n; ++j) {
      const cx pj(u[j], v[j]);
      const double* row = values.data() + j * grid.count;
      double gu = 0.0, gv = 0.0, gw = 0.0;
      for (std::size_t i = 0; i < grid.count; ++i) {
        const double nj = row[i];
        if (nj == 0.0) continue;
        const double wi = h * grid.trapezoid_weight(i) / denom[i];
        const cx r = residual[i];
        const double rj = w[j] * nj * wi;
        gu += rj * r.real();
        gv += rj * r.imag();
        gw += nj * wi * (pj.real() * r.real() + pj.imag() * r.imag() -
                         gamma[i].real() * r.real() - gamma[i].imag() * r.imag());
      }
      g[j] = gu;
      g[n + j] = gv;
      g[2 * n + j] = gw;
    }
  }
};

// gamma[x] sampled on grid nodes. For open knots gamma(0) = P_1, gamma(1) = P_n.
inline ComplexSignal synthesize(const NurbsDesign& d, const SampleGrid& grid) {
  const BasisCache cache(d.knots, grid);
  std::vector<double> denom;
  cache.denominator(d.w, denom);
  ComplexSignal out(grid);
  cache.curve(d.u, d.v, d.w, denom, out.values);
  return out;
}

// Directional derivative of gamma[x] in the direction (du, dv, dw) ~ R^{3n}.
inline ComplexSignal design_jacobian_apply(const NurbsDesign& d, const SampleGrid& grid,
                                           const std::vector<double>& direction) {
  const std::size_t n = d.count();
  detail::require(direction.size() == 3 * n,
                  "design_jacobian_apply: direction must have length 3n");
  const BasisCache cache(d.knots, grid);
  std::vector<double> denom;
  cache.denominator(d.w, denom);
  std::vector<cx> gamma;
  cache.curve(d.u, d.v, d.w, denom, gamma);
  ComplexSignal out(grid);
  cache.jacobian_apply(d.u, d.v, d.w, denom, gamma, direction.data(), direction.data() + n,
                       direction.data() + 2 * n, out.values);
  return out;
}

// Adjoint of design_jacobian_apply under the X inner product.
inline std::vector<double> design_jacobian_adjoint(const NurbsDesign& d, const SampleGrid& grid,
                                                   const ComplexSignal& residual) {
  detail::require(residual.grid == grid, "design_jacobian_adjoint: residual grid mismatch");
  const BasisCache cache(d.knots, grid);
  std::vector<double> denom;
  cache.denominator(d.w, denom);
  std::vector<cx> gamma;
  cache.curve(d.u, d.v, d.w, denom, gamma);
  std::vector<double> g(3 * d.count(), 0.0);
  cache.jacobian_adjoint(d.u, d.v, d.w, denom, gamma, residual.values, g.data());
  return g;
}

}  // namespace autoconv
