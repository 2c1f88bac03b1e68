#pragma once

// Uniform grids and complex/real signal containers over the discretized
// spaces L2_C(0,1) (solution side, "X") and L2_C(0,2) (data side, "Y"),
// together with trapezoidal inner products and pointwise modulus/phase.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace autoconv {

using cx = std::complex<double>;

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace detail

// Uniform grid over [0, domain_length]. Signals in X live on [0,1] with N
// nodes; signals in Y live on [0,2] with 2N-1 nodes. Both grids then share
// the spacing 1/(N-1), so convolution support endpoints fall on nodes.
struct SampleGrid {
  std::size_t count = 0;
  double domain_length = 1.0;

  SampleGrid() = default;
  SampleGrid(std::size_t count_, double domain_length_)
      : count(count_), domain_length(domain_length_) {
    detail::require(count >= 2, "SampleGrid: need at least 2 nodes");
    detail::require(domain_length > 0.0, "SampleGrid: domain length must be positive");
  }

  double spacing() const { return domain_length / static_cast<double>(count - 1); }
  double node(std::size_t i) const { return static_cast<double>(i) * spacing(); }

  // Trapezoidal quadrature weight of node i (excluding the spacing factor).
  double trapezoid_weight(std::size_t i) const {
    return (i == 0 || i + 1 == count) ? 0.5 : 1.0;
  }

  bool operator==(const SampleGrid&) const = default;
};

// Grid with N nodes on [0,1].
inline SampleGrid x_grid(std::size_t n_nodes) { return SampleGrid(n_nodes, 1.0); }

// Grid with 2N-1 nodes on [0,2], matching the spacing of x_grid(N).
inline SampleGrid y_grid(std::size_t n_x_nodes) {
  detail::require(n_x_nodes >= 2, "y_grid: need at least 2 X nodes");
  return SampleGrid(2 * n_x_nodes - 1, 2.0);
}

struct ComplexSignal {
  SampleGrid grid;
  std::vector<cx> values;

  ComplexSignal() = default;
  explicit ComplexSignal(const SampleGrid& g) : grid(g), values(g.count, cx(0.0, 0.0)) {}
  ComplexSignal(const SampleGrid& g, std::vector<cx> v) : grid(g), values(std::move(v)) {
    detail::require(values.size() == grid.count, "ComplexSignal: value count does not match grid");
  }
};

struct RealSignal {
  SampleGrid grid;
  std::vector<double> values;

  RealSignal() = default;
  explicit RealSignal(const SampleGrid& g) : grid(g), values(g.count, 0.0) {}
  RealSignal(const SampleGrid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
    detail::require(values.size() == grid.count, "RealSignal: value count does not match grid");
  }
};

// Trapezoidal approximation of the L2 inner product  <f,g> = \int f conj(g).
inline cx inner_product(const ComplexSignal& f, const ComplexSignal& g) {
  detail::require(f.grid == g.grid, "inner_product: signals live on different grids");
  cx acc(0.0, 0.0);
  const std::size_t n = f.grid.count;
  for (std::size_t i = 0; i < n; ++i) {
    acc += f.grid.trapezoid_weight(i) * f.values[i] * std::conj(g.values[i]);
  }
  return acc * f.grid.spacing();
}

inline double norm(const ComplexSignal& f) {
  double acc = 0.0;
  const std::size_t n = f.grid.count;
  for (std::size_t i = 0; i < n; ++i) {
    acc += f.grid.trapezoid_weight(i) * std::norm(f.values[i]);
  }
  return std::sqrt(acc * f.grid.spacing());
}

inline double norm(const RealSignal& f) {
  double acc = 0.0;
  const std::size_t n = f.grid.count;
  for (std::size_t i = 0; i < n; ++i) {
    acc += f.grid.trapezoid_weight(i) * f.values[i] * f.values[i];
  }
  return std::sqrt(acc * f.grid.spacing());
}

inline RealSignal modulus(const ComplexSignal& f) {
  RealSignal out(f.grid);
  for (std::size_t i = 0; i < f.values.size(); ++i) out.values[i] = std::abs(f.values[i]);
  return out;
}

// Principal argument in (-pi, pi], with the convention phase(0) := 0.
inline RealSignal phase(const ComplexSignal& f) {
  RealSignal out(f.grid);
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const cx v = f.values[i];
    if (v == cx(0.0, 0.0)) {
      out.values[i] = 0.0;
    } else {
      double a = std::arg(v);
      if (a <= -std::numbers::pi) a = std::numbers::pi;  // map -pi to +pi
      out.values[i] = a;
    }
  }
  return out;
}

}  // namespace autoconv
