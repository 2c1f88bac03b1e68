#pragma once

// Synthetic kernels, target pulses, exact-ratio noise injection, phase data
// generation, the oscillating ill-posedness probe, and the frequency-axis
// normalization that maps physical spectrometer coordinates onto [0,1]/[0,2].
//
// All randomness flows through mt19937_64 plus an explicit Box-Muller
// transform, so seeded outputs are identical across platforms.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "autoconv/kernel.hpp"
#include "autoconv/operator.hpp"
#include "autoconv/signal.hpp"

namespace autoconv {

namespace detail {

// Standard normal deviates from raw mt19937_64 output. std::normal_distribution
// is implementation-defined, so the transform is spelled out here.
class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log1p(-u1));  // log(1-u1), u1 in [0,1)
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  cx next_complex() {
    const double re = next();
    const double im = next();
    return cx(re, im);
  }

 private:
  double uniform01() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 rng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace detail

enum class KernelKind { Unit, Separable, GaussPhase };

struct KernelParams {
  // Separable: k(s,tau) = kappa(tau) kappa(s-tau) with
  // kappa(t) = exp(-(t - kappa_center)^2 / kappa_width).
  double kappa_center = 0.5;
  double kappa_width = 0.08;
  // GaussPhase: A exp(-((s-s0)^2 + (tau-tau0)^2)/sigma^2) exp(i(c1 s + c2 tau (s-tau))),
  // a smooth non-separable complex surrogate for a physically modelled kernel.
  double amplitude = 1.0;
  double s0 = 1.0;
  double tau0 = 0.5;
  double sigma = 0.35;
  double c1 = 2.0;
  double c2 = 4.0;
};

inline KernelGrid make_kernel(KernelKind kind, const KernelParams& params, std::size_t n) {
  detail::require(n >= 2, "make_kernel: need N >= 2");
  if (kind == KernelKind::Separable) {
    detail::require(params.kappa_width > 0.0, "make_kernel: kappa_width must be positive");
  }
  if (kind == KernelKind::GaussPhase) {
    detail::require(params.sigma > 0.0, "make_kernel: sigma must be positive");
  }
  KernelGrid out(n);
  const double h = 1.0 / static_cast<double>(n - 1);
  for (std::size_t m = 0; m < out.rows(); ++m) {
    const double s = static_cast<double>(m) * h;
    const std::size_t lo = m >= n - 1 ? m - (n - 1) : 0;
    const std::size_t hi = std::min(m, n - 1);
    for (std::size_t kk = lo; kk <= hi; ++kk) {
      const double tau = static_cast<double>(kk) * h;
      switch (kind) {
        case KernelKind::Unit:
          out.at(m, kk) = cx(1.0, 0.0);
          break;
        case KernelKind::Separable: {
          const double a = tau - params.kappa_center;
          const double b = (s - tau) - params.kappa_center;
          out.at(m, kk) = cx(std::exp(-(a * a + b * b) / params.kappa_width), 0.0);
          break;
        }
        case KernelKind::GaussPhase: {
          const double ds = s - params.s0;
          const double dt = tau - params.tau0;
          const double mag =
              params.amplitude * std::exp(-(ds * ds + dt * dt) / (params.sigma * params.sigma));
          out.at(m, kk) = std::polar(mag, params.c1 * s + params.c2 * tau * (s - tau));
          break;
        }
      }
    }
  }
  return symmetrize_kernel(out);
}

enum class TargetKind { GaussChirp, Polyphase };

// Gaussian amplitude bump (peak 1 at tau = 1/2, width 0.08, negligible at the
// interval ends) with a cubic (GaussChirp) or quintic (Polyphase) polynomial
// phase in t = tau - 1/2:
//   GaussChirp:  phi(t) = 6 t^3 + 3 t^2 + t
//   Polyphase:   phi(t) = -8 t^5 + 5 t^4 + 6 t^3 + 3 t^2 + t
inline ComplexSignal make_target(TargetKind kind, std::size_t n) {
  detail::require(n >= 2, "make_target: need N >= 2");
  constexpr double kAmpWidth = 0.08;
  ComplexSignal out(x_grid(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double t = out.grid.node(i) - 0.5;
    const double amp = std::exp(-t * t / (2.0 * kAmpWidth * kAmpWidth));
    double phi = t + 3.0 * t * t + 6.0 * t * t * t;
    if (kind == TargetKind::Polyphase) {
      phi += 5.0 * t * t * t * t - 8.0 * t * t * t * t * t;
    }
    out.values[i] = std::polar(amp, phi);
  }
  return out;
}

// Adds a seeded Gaussian perturbation rescaled so that the perturbation norm
// is exactly level * ||signal||.
inline ComplexSignal add_relative_noise(const ComplexSignal& signal, double level,
                                        std::uint64_t seed) {
  detail::require(level >= 0.0, "add_relative_noise: level must be nonnegative");
  if (level == 0.0) return signal;
  detail::GaussianSampler gauss(seed);
  ComplexSignal noise(signal.grid);
  for (auto& v : noise.values) v = gauss.next_complex();
  const double target = level * norm(signal);
  const double raw = norm(noise);
  const double scale = raw > 0.0 ? target / raw : 0.0;
  ComplexSignal out = signal;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += scale * noise.values[i];
  return out;
}

inline RealSignal add_relative_noise(const RealSignal& signal, double level, std::uint64_t seed) {
  detail::require(level >= 0.0, "add_relative_noise: level must be nonnegative");
  if (level == 0.0) return signal;
  detail::GaussianSampler gauss(seed);
  RealSignal noise(signal.grid);
  for (auto& v : noise.values) v = gauss.next();
  const double target = level * norm(signal);
  const double raw = norm(noise);
  const double scale = raw > 0.0 ? target / raw : 0.0;
  RealSignal out = signal;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += scale * noise.values[i];
  return out;
}

// psi^delta = arg(y) + theta with ||theta|| = noise_level * ||arg(y)||.
// Nodes where |y| < 1e-12 get phase 0 before the noise is added.
inline RealSignal make_phase_data(const ComplexSignal& y, double noise_level, std::uint64_t seed) {
  detail::require(noise_level >= 0.0, "make_phase_data: level must be nonnegative");
  RealSignal psi = phase(y);
  for (std::size_t i = 0; i < y.values.size(); ++i) {
    if (std::abs(y.values[i]) < 1e-12) psi.values[i] = 0.0;
  }
  if (noise_level == 0.0) return psi;
  return add_relative_noise(psi, noise_level, seed);
}

// h_n(tau) = exp(i n^2 tau^2): unit modulus, unit X norm, and increasingly
// oscillatory with n. Requires N >= 10 n^2 grid nodes to stay resolved.
inline ComplexSignal oscillation_probe(std::size_t n, std::size_t grid_nodes) {
  detail::require(n >= 1, "oscillation_probe: need n >= 1");
  detail::require(grid_nodes >= 10 * n * n,
                  "oscillation_probe: grid too coarse for the requested oscillation");
  ComplexSignal out(x_grid(grid_nodes));
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  for (std::size_t i = 0; i < grid_nodes; ++i) {
    const double tau = out.grid.node(i);
    out.values[i] = std::polar(1.0, n2 * tau * tau);
  }
  return out;
}

struct FrequencyBand {
  double omega_low = 3.5e15;  // Hz
  double omega_up = 4.1e15;   // Hz
  double omega_cw = 3.86e15;  // Hz

  void validate() const {
    detail::require(omega_low < omega_up, "FrequencyBand: need omega_low < omega_up");
  }
};

enum class Space { X, Y };

// Maps a physical frequency onto the normalized solution coordinate
// tau = (omega - omega_low) / (omega_up - omega_low) in [0,1], or a
// self-diffraction frequency onto s = (omega + omega_cw - 2 omega_low) /
// (omega_up - omega_low) in [0,2].
inline double normalize_frequency_axis(const FrequencyBand& band, double omega, Space space) {
  band.validate();
  const double width = band.omega_up - band.omega_low;
  double coord = 0.0;
  if (space == Space::X) {
    coord = (omega - band.omega_low) / width;
    detail::require(coord >= 0.0 && coord <= 1.0, "normalize_frequency_axis: omega out of band");
  } else {
    coord = (omega + band.omega_cw - 2.0 * band.omega_low) / width;
    detail::require(coord >= 0.0 && coord <= 2.0, "normalize_frequency_axis: omega out of band");
  }
  return coord;
}

}  // namespace autoconv
