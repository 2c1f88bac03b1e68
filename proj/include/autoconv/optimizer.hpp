#pragma once

// Strong Wolfe line search, BFGS minimization with inverse-Hessian updates,
// and the continuation outer loop that drives the discrepancy weight beta
// down a geometric schedule with warm starts, per-step gradient tolerances,
// and best-e^2 selection.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "autoconv/functionals.hpp"
#include "autoconv/nurbs.hpp"
#include "autoconv/signal.hpp"

namespace autoconv {

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double nrm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

}  // namespace detail

struct WolfeParams {
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_bracket = 50;
  int max_zoom = 60;
};

struct LineSearchResult {
  double step = 0.0;
  double value = std::numeric_limits<double>::infinity();
  double deriv = 0.0;
  int evals = 0;
  bool ok = false;
};

// One-dimensional merit function along a ray: phi(rho) and phi'(rho).
// phi may return +inf for infeasible steps; the derivative is ignored there.
using LineFunction = std::function<std::pair<double, double>(double)>;

// Strong Wolfe search: sufficient decrease phi(rho) <= phi(0) + c1 rho phi'(0)
// and curvature |phi'(rho)| <= c2 |phi'(0)|. Throws if phi'(0) >= 0.
inline LineSearchResult wolfe_line_search(const LineFunction& phi, double phi0, double dphi0,
                                          double rho_init = 1.0, const WolfeParams& wp = {}) {
  detail::require(dphi0 < 0.0, "wolfe_line_search: not a descent direction");
  detail::require(rho_init > 0.0, "wolfe_line_search: initial step must be positive");

  LineSearchResult out;

  auto zoom = [&](double lo, double flo, double dlo, double hi, double fhi) -> void {
    for (int it = 0; it < wp.max_zoom; ++it) {
      // Quadratic interpolation on (lo, flo, dlo, hi, fhi), safeguarded by
      // bisection; infeasible (+inf) endpoints fall back to bisection too.
      double a = 0.5 * (lo + hi);
      const double width = hi - lo;
      if (std::isfinite(fhi)) {
        const double denom = 2.0 * (fhi - flo - dlo * width);
        if (denom != 0.0) {
          const double cand = lo - dlo * width * width / denom;
          const double margin = 0.1 * std::abs(width);
          if (std::isfinite(cand) && cand > std::min(lo, hi) + margin &&
              cand < std::max(lo, hi) - margin) {
            a = cand;
          }
        }
      }
      auto [fa, da] = phi(a);
      ++out.evals;
      if (fa > phi0 + wp.c1 * a * dphi0 || fa >= flo) {
        hi = a;
        fhi = fa;
      } else {
        if (std::abs(da) <= -wp.c2 * dphi0) {
          out.step = a;
          out.value = fa;
          out.deriv = da;
          out.ok = true;
          return;
        }
        if (da * (hi - lo) >= 0.0) {
          hi = lo;
          fhi = flo;
        }
        lo = a;
        flo = fa;
        dlo = da;
      }
      if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
    }
  };

  double prev = 0.0, fprev = phi0, dprev = dphi0;
  double rho = rho_init;
  for (int it = 0; it < wp.max_bracket; ++it) {
    auto [frho, drho] = phi(rho);
    ++out.evals;
    if (frho > phi0 + wp.c1 * rho * dphi0 || (it > 0 && frho >= fprev)) {
      zoom(prev, fprev, dprev, rho, frho);
      return out;
    }
    if (std::abs(drho) <= -wp.c2 * dphi0) {
      out.step = rho;
      out.value = frho;
      out.deriv = drho;
      out.ok = true;
      return out;
    }
    if (drho >= 0.0) {
      zoom(rho, frho, drho, prev, fprev);
      return out;
    }
    prev = rho;
    fprev = frho;
    dprev = drho;
    rho *= 2.0;
  }
  return out;
}

// Objective callback: returns the value at x and, when grad is non-null,
// fills it with the gradient. May return +inf for infeasible x.
using ObjectiveFn = std::function<double(const std::vector<double>&, std::vector<double>*)>;

struct BfgsResult {
  std::vector<double> x;
  double value = 0.0;
  std::vector<double> gradient;
  int iterations = 0;
  bool converged = false;
  bool line_search_failed = false;
};

// BFGS with dense inverse-Hessian approximation H and strong Wolfe steps.
// Stops when ||grad|| <= grad_tol or after max_iters iterations; a failed
// line search returns the current iterate with the failure flag set.
inline BfgsResult bfgs_minimize(const ObjectiveFn& obj, std::vector<double> x0, double grad_tol,
                                int max_iters, const WolfeParams& wp = {}) {
  const std::size_t d = x0.size();
  BfgsResult res;
  res.x = std::move(x0);
  res.gradient.assign(d, 0.0);
  res.value = obj(res.x, &res.gradient);
  detail::require(std::isfinite(res.value), "bfgs_minimize: objective not finite at x0");

  if (detail::nrm2(res.gradient) <= grad_tol) {
    res.converged = true;
    return res;
  }

  std::vector<double> hess(d * d, 0.0);  // inverse-Hessian approximation
  for (std::size_t i = 0; i < d; ++i) hess[i * d + i] = 1.0;
  bool scale_pending = true;

  std::vector<double> dir(d), x_new(d), g_new(d), s(d), y(d), hy(d);

  for (res.iterations = 0; res.iterations < max_iters; ++res.iterations) {
    // dir = -H g
    for (std::size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      const double* row = hess.data() + i * d;
      for (std::size_t j = 0; j < d; ++j) acc += row[j] * res.gradient[j];
      dir[i] = -acc;
    }
    double slope = detail::dot(dir, res.gradient);
    if (slope >= 0.0) {
      // H lost positive definiteness numerically; restart from steepest descent.
      for (std::size_t i = 0; i < d; ++i) {
        std::fill(hess.begin() + i * d, hess.begin() + (i + 1) * d, 0.0);
        hess[i * d + i] = 1.0;
      }
      scale_pending = true;
      for (std::size_t i = 0; i < d; ++i) dir[i] = -res.gradient[i];
      slope = detail::dot(dir, res.gradient);
      if (slope >= 0.0) break;  // gradient numerically zero
    }

    const auto line = [&](double rho) {
      for (std::size_t i = 0; i < d; ++i) x_new[i] = res.x[i] + rho * dir[i];
      const double v = obj(x_new, &g_new);
      return std::pair<double, double>(v, std::isfinite(v) ? detail::dot(g_new, dir)
                                                           : std::numeric_limits<double>::quiet_NaN());
    };

    const LineSearchResult ls = wolfe_line_search(line, res.value, slope, 1.0, wp);
    if (!ls.ok) {
      res.line_search_failed = true;
      break;
    }
    // x_new/g_new hold the last evaluated point; re-evaluate if the accepted
    // step is not the one currently in the buffers.
    for (std::size_t i = 0; i < d; ++i) {
      const double xi = res.x[i] + ls.step * dir[i];
      if (xi != x_new[i]) {
        line(ls.step);
        break;
      }
    }

    for (std::size_t i = 0; i < d; ++i) {
      s[i] = x_new[i] - res.x[i];
      y[i] = g_new[i] - res.gradient[i];
    }
    res.x = x_new;
    res.gradient = g_new;
    res.value = ls.value;

    if (detail::nrm2(res.gradient) <= grad_tol) {
      ++res.iterations;
      res.converged = true;
      return res;
    }

    const double sy = detail::dot(s, y);
    if (sy > 1e-12 * detail::nrm2(s) * detail::nrm2(y)) {
      if (scale_pending) {
        const double yy = detail::dot(y, y);
        if (yy > 0.0) {
          const double tau = sy / yy;
          for (std::size_t i = 0; i < d; ++i) {
            std::fill(hess.begin() + i * d, hess.begin() + (i + 1) * d, 0.0);
            hess[i * d + i] = tau;
          }
        }
        scale_pending = false;
      }
      // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T, rho = 1/sy
      const double rho = 1.0 / sy;
      for (std::size_t i = 0; i < d; ++i) {
        double acc = 0.0;
        const double* row = hess.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) acc += row[j] * y[j];
        hy[i] = acc;
      }
      const double yhy = detail::dot(y, hy);
      const double c = rho * rho * yhy + rho;
      for (std::size_t i = 0; i < d; ++i) {
        double* row = hess.data() + i * d;
        const double si = s[i];
        const double hyi = hy[i];
        for (std::size_t j = 0; j < d; ++j) {
          row[j] += c * si * s[j] - rho * (si * hy[j] + hyi * s[j]);
        }
      }
    }
  }
  return res;
}

struct ContinuationSchedule {
  double beta0 = 100.0;
  double q = 0.25;
  double beta_min = 1e-6;
  int max_iters = 10000;   // BFGS iteration cap per continuation step
  double tol_floor = 1e-9;
  double tol_scale = 2000.0;

  void validate() const {
    detail::require(beta0 > 0.0, "ContinuationSchedule: beta0 must be positive");
    detail::require(q > 0.0 && q < 1.0, "ContinuationSchedule: need 0 < q < 1");
    detail::require(beta_min > 0.0 && beta_min < beta0,
                    "ContinuationSchedule: need 0 < beta_min < beta0");
    detail::require(max_iters > 0, "ContinuationSchedule: need positive iteration cap");
    detail::require(tol_floor > 0.0 && tol_scale > 0.0, "ContinuationSchedule: invalid tolerances");
  }

  double beta_at(int k) const { return beta0 * std::pow(q, static_cast<double>(k)); }
  double tol_at(int k) const { return std::max(beta_at(k) / tol_scale, tol_floor); }
};

struct ContinuationStep {
  double beta = 0.0;
  int iterations = 0;
  double d = 0.0;
  double r = 0.0;
  double e2 = 0.0;
  bool line_search_failed = false;
};

struct SolveReport {
  std::vector<ContinuationStep> steps;
  std::size_t best_step = 0;
  double beta_star = 0.0;
  double best_d = 0.0;
  double best_r = 0.0;
  double best_e2 = 0.0;
  NurbsDesign best_design;
  ComplexSignal best_signal;  // gamma[x*] on the X grid
  ComplexSignal best_image;   // F_n(x*) on the Y grid
  long total_iterations = 0;
  double wall_seconds = 0.0;
  bool ok = false;
  std::string message;
};

// Continuation solve: minimizes the objective at beta_k = q^k beta0 by BFGS,
// warm-starting each step from the previous minimizer, with gradient
// tolerance max(beta_k / tol_scale, tol_floor) per step. Stops once beta
// falls below beta_min or e^2 has increased twice in a row, and reports the
// step with the smallest combined error e^2.
inline SolveReport tigra_solve(const FitProblem& prob, const ContinuationSchedule& sched,
                               const NurbsDesign& x_init) {
  sched.validate();
  const auto t0 = std::chrono::steady_clock::now();

  FunctionalEvaluator eval(prob, x_init.knots);
  std::vector<double> x = FunctionalEvaluator::pack(x_init);
  detail::require(eval.feasible(x), "tigra_solve: infeasible initial design");
  eval.set_beta(sched.beta0);
  detail::require(std::isfinite(eval.value(x)), "tigra_solve: objective not finite at x_init");

  const ObjectiveFn obj = [&eval](const std::vector<double>& p, std::vector<double>* g) {
    if (g) return eval.value_and_gradient(p, *g);
    return eval.value(p);
  };

  SolveReport report;
  std::vector<double> best_x = x;
  double best_e2 = std::numeric_limits<double>::infinity();
  int rises = 0;
  double prev_e2 = std::numeric_limits<double>::infinity();
  bool any_progress = false;

  for (int k = 0;; ++k) {
    const double beta_k = sched.beta_at(k);
    if (beta_k < sched.beta_min) break;
    eval.set_beta(beta_k);

    const BfgsResult inner = bfgs_minimize(obj, x, sched.tol_at(k), sched.max_iters);
    x = inner.x;

    const ErrorSplit err = eval.errors(x);
    ContinuationStep step;
    step.beta = beta_k;
    step.iterations = inner.iterations;
    step.d = err.d;
    step.r = err.r;
    step.e2 = err.e2;
    step.line_search_failed = inner.line_search_failed;
    report.steps.push_back(step);
    report.total_iterations += inner.iterations;
    if (inner.iterations > 0 || !inner.line_search_failed) any_progress = true;

    if (err.e2 < best_e2) {
      best_e2 = err.e2;
      best_x = x;
      report.best_step = report.steps.size() - 1;
    }
    rises = (err.e2 > prev_e2) ? rises + 1 : 0;
    prev_e2 = err.e2;
    if (rises >= 2) break;
  }

  detail::require(!report.steps.empty(), "tigra_solve: empty continuation schedule");
  report.beta_star = report.steps[report.best_step].beta;
  report.best_d = report.steps[report.best_step].d;
  report.best_r = report.steps[report.best_step].r;
  report.best_e2 = report.steps[report.best_step].e2;
  report.best_design = eval.unpack(best_x);
  report.best_signal = eval.curve(best_x);
  report.best_image = forward(prob.kernel, report.best_signal);
  report.ok = any_progress;
  if (!report.ok) report.message = "line search failed at every continuation step";
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

// Initial design of the continuation: open uniform knots, constant weights
// w_j = w0, and u_j = v_j = a((j-1)/(n-1)) / sqrt(2), so that the control
// polygon modulus interpolates the measured amplitude.
inline NurbsDesign default_initial_design(const RealSignal& amp, std::size_t n, std::size_t p,
                                          double w0) {
  detail::require(n >= p + 1, "default_initial_design: need n >= p+1");
  detail::require(w0 > 0.0, "default_initial_design: w0 must be positive");
  detail::require(amp.grid.domain_length == 1.0, "default_initial_design: amplitude must be on X");
  KnotVector knots = open_uniform_knots(n, p);
  std::vector<double> u(n), v(n), w(n, w0);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double t = static_cast<double>(j) / static_cast<double>(n - 1);
    const auto idx = static_cast<std::size_t>(
        std::llround(t * static_cast<double>(amp.grid.count - 1)));
    u[j] = v[j] = amp.values[idx] * inv_sqrt2;
  }
  return NurbsDesign(std::move(u), std::move(v), std::move(w), std::move(knots));
}

}  // namespace autoconv
