#pragma once

// Scalar objective pieces for the deautoconvolution / phase retrieval fits:
// discrepancies, Sign operators, design-parameter penalties, the combined
// error e(x)^2 = 2 d(x)^2 + r(x)^2, and assembly of objective value and
// analytic gradient for every data mode.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "autoconv/kernel.hpp"
#include "autoconv/nurbs.hpp"
#include "autoconv/operator.hpp"
#include "autoconv/signal.hpp"

namespace autoconv {

constexpr double kDefaultGuardEps = 1e-10;

// Modulus threshold below which pointwise |.|-sensitivities are dropped
// (subgradient choice at the nonsmooth zeros of the modulus).
constexpr double kModulusGuard = 1e-12;

enum class DataMode {
  FullData,          // relative misfit against complex data y^delta on Y
  PhaseOnly,         // self-normalized phase misfit against psi^delta on Y
  PhaseOnlySignEps,  // alternative phase misfit through the Sign_eps operator
};

inline double pos_inf() { return std::numeric_limits<double>::infinity(); }

// Pointwise g/|g| with 0 where g vanishes.
inline ComplexSignal sign_op(const ComplexSignal& g) {
  ComplexSignal out(g.grid);
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    const double a = std::abs(g.values[i]);
    out.values[i] = a == 0.0 ? cx(0.0, 0.0) : g.values[i] / a;
  }
  return out;
}

// Lipschitz approximation g/max(eps, |g|) of the Sign operator.
inline ComplexSignal sign_eps(const ComplexSignal& g, double eps) {
  detail::require(eps > 0.0, "sign_eps: eps must be positive");
  ComplexSignal out(g.grid);
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    out.values[i] = g.values[i] / std::max(eps, std::abs(g.values[i]));
  }
  return out;
}

// d(psi1, psi2) = || e^{i psi1} - e^{i psi2} ||_Y. Penalizes phase differences
// modulo 2 pi and never exceeds || psi1 - psi2 ||.
inline double phase_pseudometric(const RealSignal& psi1, const RealSignal& psi2) {
  detail::require(psi1.grid == psi2.grid, "phase_pseudometric: grids differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < psi1.values.size(); ++i) {
    const cx diff = std::polar(1.0, psi1.values[i]) - std::polar(1.0, psi2.values[i]);
    acc += psi1.grid.trapezoid_weight(i) * std::norm(diff);
  }
  return std::sqrt(acc * psi1.grid.spacing());
}

struct GuardViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// d(x)^2 = || g - |g| e^{i psi} ||_Y^2 / || g ||_Y^2, bounded by 4.
inline double rel_phase_discrepancy(const ComplexSignal& g_model, const RealSignal& psi_delta,
                                    double guard_eps = kDefaultGuardEps) {
  detail::require(g_model.grid == psi_delta.grid, "rel_phase_discrepancy: grids differ");
  const double den = norm(g_model);
  if (den < guard_eps) {
    throw GuardViolation("rel_phase_discrepancy: ||g|| below the guard level");
  }
  double num = 0.0;
  for (std::size_t i = 0; i < g_model.values.size(); ++i) {
    const cx gi = g_model.values[i];
    const cx res = gi - std::abs(gi) * std::polar(1.0, psi_delta.values[i]);
    num += g_model.grid.trapezoid_weight(i) * std::norm(res);
  }
  num *= g_model.grid.spacing();
  return num / (den * den);
}

// d(x)^2 = || g - y ||_Y^2 / || y ||_Y^2.
inline double full_data_discrepancy(const ComplexSignal& g_model, const ComplexSignal& y_delta) {
  detail::require(g_model.grid == y_delta.grid, "full_data_discrepancy: grids differ");
  const double den = norm(y_delta);
  detail::require(den > 0.0, "full_data_discrepancy: data has zero norm");
  double num = 0.0;
  for (std::size_t i = 0; i < g_model.values.size(); ++i) {
    num += g_model.grid.trapezoid_weight(i) * std::norm(g_model.values[i] - y_delta.values[i]);
  }
  num *= g_model.grid.spacing();
  return num / (den * den);
}

// || |f| - a ||_X^2 (unnormalized; the relative version r(x)^2 divides by ||a||^2).
inline double amp_discrepancy(const ComplexSignal& f_model, const RealSignal& amp_data) {
  detail::require(f_model.grid == amp_data.grid, "amp_discrepancy: grids differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < f_model.values.size(); ++i) {
    const double diff = std::abs(f_model.values[i]) - amp_data.values[i];
    acc += f_model.grid.trapezoid_weight(i) * diff * diff;
  }
  return acc * f_model.grid.spacing();
}

// R_P(u,v) = (1/2n) sum_j (u_{j+1}-u_j)^2 + (v_{j+1}-v_j)^2.
inline double penalty_P(const std::vector<double>& u, const std::vector<double>& v) {
  detail::require(u.size() == v.size() && u.size() >= 2, "penalty_P: need matching arrays, n >= 2");
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < u.size(); ++j) {
    const double du = u[j + 1] - u[j];
    const double dv = v[j + 1] - v[j];
    acc += du * du + dv * dv;
  }
  return acc / (2.0 * static_cast<double>(u.size()));
}

// Piecewise weight barrier: +inf for w <= 0, w^{-2} for 0 < w < w0/2, and the
// matching quadratic (w0/2)^{-4} (w - w0)^2 for w >= w0/2. C^1 at the junction.
inline double barrier_fw0(double w, double w0) {
  if (w <= 0.0) return pos_inf();
  if (w < 0.5 * w0) return 1.0 / (w * w);
  const double c = 0.5 * w0;
  const double d = w - w0;
  return d * d / (c * c * c * c);
}

inline double barrier_fw0_deriv(double w, double w0) {
  if (w < 0.5 * w0) return -2.0 / (w * w * w);
  const double c = 0.5 * w0;
  return 2.0 * (w - w0) / (c * c * c * c);
}

// R_{w0}(w) = (1/2n) sum_j f_{w0}(w_j); +inf as soon as any weight is infeasible.
inline double penalty_w(const std::vector<double>& w, double w0) {
  double acc = 0.0;
  for (double wj : w) {
    if (wj <= 0.0) return pos_inf();
    acc += barrier_fw0(wj, w0);
  }
  return acc / (2.0 * static_cast<double>(w.size()));
}

// R(x) = beta_P R_P(u,v) + beta_w R_{w0}(w).
inline double nurbs_penalty(const NurbsDesign& x, double beta_P, double beta_w, double w0) {
  return beta_P * penalty_P(x.u, x.v) + beta_w * penalty_w(x.w, w0);
}

// Data bundle and weights for one fit.
struct FitProblem {
  DataMode mode = DataMode::PhaseOnly;
  KernelGrid kernel;
  RealSignal amp_data;       // a^sigma on the X grid
  RealSignal phase_data;     // psi^delta on the Y grid (phase modes)
  ComplexSignal full_data;   // y^delta on the Y grid (FullData mode)
  double guard_eps = kDefaultGuardEps;
  double alpha = 1e-6;
  double beta = 100.0;
  double beta_P = 1.0;
  double beta_w = 1.0;
  double w0 = 10.0;

  void validate() const {
    detail::require(kernel.grid_count >= 2, "FitProblem: missing kernel");
    detail::require(amp_data.grid == x_grid(kernel.grid_count),
                    "FitProblem: amplitude data must live on the kernel's X grid");
    if (mode == DataMode::FullData) {
      detail::require(full_data.grid == y_grid(kernel.grid_count),
                      "FitProblem: full data must live on the kernel's Y grid");
      detail::require(phase_data.values.empty(), "FitProblem: phase data not used in FullData mode");
    } else {
      detail::require(phase_data.grid == y_grid(kernel.grid_count),
                      "FitProblem: phase data must live on the kernel's Y grid");
      detail::require(full_data.values.empty(), "FitProblem: full data not used in phase modes");
    }
    detail::require(guard_eps > 0.0, "FitProblem: guard eps must be positive");
    detail::require(alpha >= 0.0 && beta > 0.0, "FitProblem: need alpha >= 0, beta > 0");
    detail::require(beta_P >= 0.0 && beta_w >= 0.0 && w0 > 0.0, "FitProblem: invalid penalty weights");
  }
};

struct ErrorSplit {
  double d = 0.0;
  double r = 0.0;
  double e2 = 0.0;
};

// Evaluation context for the Tikhonov objective over design vectors
// x = (u, v, w) in R^{3n}. Owns the tabulated basis and scratch buffers, so
// repeated evaluations only pay for the O(N^2) operator applications.
class FunctionalEvaluator {
 public:
  FunctionalEvaluator(const FitProblem& prob, const KnotVector& knots)
      : prob_(&prob),
        knots_(knots),
        basis_(knots, x_grid(prob.kernel.grid_count)),
        n_(knots.control_count()) {
    prob.validate();
    amp_norm_ = norm(prob.amp_data);
  }

  std::size_t control_count() const { return n_; }
  std::size_t dim() const { return 3 * n_; }
  const FitProblem& problem() const { return *prob_; }
  const KnotVector& knots() const { return knots_; }

  double beta() const { return beta_; }
  void set_beta(double b) {
    detail::require(b > 0.0, "set_beta: beta must be positive");
    beta_ = b;
  }

  static std::vector<double> pack(const NurbsDesign& d) {
    std::vector<double> x;
    x.reserve(3 * d.count());
    x.insert(x.end(), d.u.begin(), d.u.end());
    x.insert(x.end(), d.v.begin(), d.v.end());
    x.insert(x.end(), d.w.begin(), d.w.end());
    return x;
  }

  NurbsDesign unpack(const std::vector<double>& x) const {
    check_dim(x);
    return NurbsDesign(std::vector<double>(x.begin(), x.begin() + n_),
                       std::vector<double>(x.begin() + n_, x.begin() + 2 * n_),
                       std::vector<double>(x.begin() + 2 * n_, x.end()), knots_);
  }

  bool feasible(const std::vector<double>& x) const {
    check_dim(x);
    for (std::size_t j = 0; j < n_; ++j) {
      if (x[2 * n_ + j] <= 0.0) return false;
    }
    return true;
  }

  // Objective value; +inf at infeasible weights and, in PhaseOnly mode, when
  // ||F_n(x)||_Y falls below the guard level.
  double value(const std::vector<double>& x) { return evaluate(x, nullptr); }

  // Combined value-and-gradient evaluation sharing one forward application.
  // At infeasible points the value is +inf and the gradient is not touched.
  double value_and_gradient(const std::vector<double>& x, std::vector<double>& grad) {
    grad.assign(dim(), 0.0);
    return evaluate(x, &grad);
  }

  // Relative errors d, r and the combined e^2 = 2 d^2 + r^2 at x.
  ErrorSplit errors(const std::vector<double>& x) {
    detail::require(feasible(x), "errors: infeasible design");
    detail::require(amp_norm_ > 0.0, "errors: amplitude data has zero norm");
    sync_geometry(x);
    const ComplexSignal g = forward(prob_->kernel, f_);
    ErrorSplit out;
    switch (prob_->mode) {
      case DataMode::FullData:
        out.d = std::sqrt(full_data_discrepancy(g, prob_->full_data));
        break;
      case DataMode::PhaseOnly:
      case DataMode::PhaseOnlySignEps:
        out.d = std::sqrt(rel_phase_discrepancy(g, prob_->phase_data, prob_->guard_eps));
        break;
    }
    out.r = std::sqrt(amp_discrepancy(f_, prob_->amp_data)) / amp_norm_;
    out.e2 = 2.0 * out.d * out.d + out.r * out.r;
    return out;
  }

  // gamma[x] on the X grid.
  ComplexSignal curve(const std::vector<double>& x) {
    detail::require(feasible(x), "curve: infeasible design");
    sync_geometry(x);
    return f_;
  }

 private:
  void check_dim(const std::vector<double>& x) const {
    detail::require(x.size() == 3 * n_, "FunctionalEvaluator: design vector must have length 3n");
  }

  // Splits x into (u, v, w) and rebuilds the denominators and the curve.
  void sync_geometry(const std::vector<double>& x) {
    u_.assign(x.begin(), x.begin() + n_);
    v_.assign(x.begin() + n_, x.begin() + 2 * n_);
    w_.assign(x.begin() + 2 * n_, x.end());
    basis_.denominator(w_, denom_);
    basis_.curve(u_, v_, w_, denom_, curve_vals_);
    f_ = ComplexSignal(basis_.grid, curve_vals_);
  }

  double evaluate(const std::vector<double>& x, std::vector<double>* grad) {
    check_dim(x);
    if (!feasible(x)) return pos_inf();
    sync_geometry(x);

    const KernelGrid& kernel = prob_->kernel;
    const ComplexSignal g = forward(kernel, f_);
    const SampleGrid gy = g.grid;
    const double hy = gy.spacing();

    double value = 0.0;
    // Cogradient of the data term with respect to g: the first variation is
    // delta = Re <delta_g, Gg>_Y.
    ComplexSignal Gg(gy);

    switch (prob_->mode) {
      case DataMode::FullData: {
        const ComplexSignal& y = prob_->full_data;
        const double yn = norm(y);
        detail::require(yn > 0.0, "objective: full data has zero norm");
        double num = 0.0;
        for (std::size_t m = 0; m < gy.count; ++m) {
          const cx res = g.values[m] - y.values[m];
          num += gy.trapezoid_weight(m) * std::norm(res);
          Gg.values[m] = 2.0 * res / (yn * yn);
        }
        value += num * hy / (yn * yn);
        break;
      }
      case DataMode::PhaseOnly: {
        const double gn = norm(g);
        if (gn < prob_->guard_eps) return pos_inf();
        const double den = gn * gn;
        double num = 0.0;
        for (std::size_t m = 0; m < gy.count; ++m) {
          const cx gm = g.values[m];
          const double am = std::abs(gm);
          const cx unit_psi = std::polar(1.0, prob_->phase_data.values[m]);
          const cx res = gm - am * unit_psi;
          num += gy.trapezoid_weight(m) * std::norm(res);
          // Numerator cogradient: 2 res minus the |g| sensitivity along g/|g|.
          cx gnum = 2.0 * res;
          if (am > kModulusGuard) {
            const double proj = (std::conj(gm) * unit_psi).real() - am;
            gnum -= 2.0 * proj * gm / am;
          }
          Gg.values[m] = gnum;
        }
        num *= hy;
        const double phi = num / den;
        value += phi;
        // Quotient rule: G = (G_num - 2 phi g) / den.
        for (std::size_t m = 0; m < gy.count; ++m) {
          Gg.values[m] = (Gg.values[m] - 2.0 * phi * g.values[m]) / den;
        }
        break;
      }
      case DataMode::PhaseOnlySignEps: {
        const double eps = prob_->guard_eps;
        double acc = 0.0;
        for (std::size_t m = 0; m < gy.count; ++m) {
          const cx gm = g.values[m];
          const double am = std::abs(gm);
          const cx unit_psi = std::polar(1.0, prob_->phase_data.values[m]);
          const cx res = gm / std::max(eps, am) - unit_psi;
          acc += gy.trapezoid_weight(m) * std::norm(res);
          if (am >= eps) {
            const double proj = (am - (unit_psi * std::conj(gm)).real()) / (am * am * am);
            Gg.values[m] = res / am - proj * gm;
          } else {
            Gg.values[m] = res / eps;
          }
        }
        value += 0.5 * acc * hy;
        break;
      }
    }

    // Amplitude term (beta/2) || |f| - a ||_X^2 and its cogradient in X.
    ComplexSignal Gf(f_.grid);
    {
      const RealSignal& a = prob_->amp_data;
      double acc = 0.0;
      for (std::size_t i = 0; i < f_.grid.count; ++i) {
        const double am = std::abs(f_.values[i]);
        const double diff = am - a.values[i];
        acc += f_.grid.trapezoid_weight(i) * diff * diff;
        if (grad && am > kModulusGuard) {
          Gf.values[i] = beta_ * diff * f_.values[i] / am;
        }
      }
      value += 0.5 * beta_ * acc * f_.grid.spacing();
    }

    // Design-parameter penalty.
    const double rp = penalty_P(u_, v_);
    const double rw = penalty_w(w_, prob_->w0);
    value += prob_->alpha * (prob_->beta_P * rp + prob_->beta_w * rw);
    if (!std::isfinite(value)) return pos_inf();

    if (grad) {
      // Pull the data cogradient back through the operator derivative and add
      // the amplitude cogradient, then push through the design Jacobian.
      const ComplexSignal pulled = frechet_adjoint_apply(kernel, f_, Gg);
      for (std::size_t i = 0; i < Gf.grid.count; ++i) Gf.values[i] += pulled.values[i];
      basis_.jacobian_adjoint(u_, v_, w_, denom_, curve_vals_, Gf.values, grad->data());

      // Analytic penalty derivatives.
      const double cp = prob_->alpha * prob_->beta_P / static_cast<double>(n_);
      for (std::size_t j = 0; j < n_; ++j) {
        double gu = 0.0, gv = 0.0;
        if (j > 0) {
          gu += u_[j] - u_[j - 1];
          gv += v_[j] - v_[j - 1];
        }
        if (j + 1 < n_) {
          gu -= u_[j + 1] - u_[j];
          gv -= v_[j + 1] - v_[j];
        }
        (*grad)[j] += cp * gu;
        (*grad)[n_ + j] += cp * gv;
      }
      const double cw = prob_->alpha * prob_->beta_w / (2.0 * static_cast<double>(n_));
      for (std::size_t j = 0; j < n_; ++j) {
        (*grad)[2 * n_ + j] += cw * barrier_fw0_deriv(w_[j], prob_->w0);
      }
    }
    return value;
  }

  const FitProblem* prob_;
  KnotVector knots_;
  BasisCache basis_;
  std::size_t n_;
  double beta_ = 100.0;
  double amp_norm_ = 0.0;

  std::vector<double> u_, v_, w_, denom_;
  std::vector<cx> curve_vals_;
  ComplexSignal f_;
};

// Mode-dependent Tikhonov value at a design; +inf encodes infeasibility.
inline double objective_value(const NurbsDesign& x, const FitProblem& prob) {
  FunctionalEvaluator eval(prob, x.knots);
  eval.set_beta(prob.beta);
  return eval.value(FunctionalEvaluator::pack(x));
}

// Analytic gradient of the objective; throws at infeasible designs.
inline std::vector<double> objective_gradient(const NurbsDesign& x, const FitProblem& prob) {
  FunctionalEvaluator eval(prob, x.knots);
  eval.set_beta(prob.beta);
  std::vector<double> grad;
  const double v = eval.value_and_gradient(FunctionalEvaluator::pack(x), grad);
  detail::require(std::isfinite(v), "objective_gradient: objective is not finite at x");
  return grad;
}

// (d, r, e^2) with e^2 = 2 d^2 + r^2.
inline ErrorSplit combined_error(const NurbsDesign& x, const FitProblem& prob) {
  FunctionalEvaluator eval(prob, x.knots);
  eval.set_beta(prob.beta);
  return eval.errors(FunctionalEvaluator::pack(x));
}

}  // namespace autoconv
