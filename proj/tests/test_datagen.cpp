#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <limits>

#include "autoconv/datagen.hpp"
#include "autoconv/functionals.hpp"
#include "autoconv/operator.hpp"
#include "oracles.hpp"

using namespace autoconv;
using Catch::Matchers::WithinAbs;

TEST_CASE("unit kernel fills the parallelogram with ones") {
  const KernelGrid k = make_kernel(KernelKind::Unit, {}, 3);
  for (std::size_t m = 0; m < k.rows(); ++m) {
    for (std::size_t kk = 0; kk < k.cols(); ++kk) {
      REQUIRE(k.at(m, kk) == (k.in_support(m, kk) ? cx(1.0, 0.0) : cx(0.0, 0.0)));
    }
  }
}

TEST_CASE("separable kernel with flat profile reduces to the unit kernel") {
  KernelParams params;
  params.kappa_width = 1e300;  // kappa is 1 to machine precision
  const KernelGrid flat = make_kernel(KernelKind::Separable, params, 17);
  const KernelGrid unit = make_kernel(KernelKind::Unit, {}, 17);
  for (std::size_t i = 0; i < flat.values.size(); ++i) {
    REQUIRE(flat.values[i] == unit.values[i]);
  }
}

TEST_CASE("generated kernels are symmetric on the grid") {
  for (auto kind : {KernelKind::Unit, KernelKind::Separable, KernelKind::GaussPhase}) {
    const KernelGrid k = make_kernel(kind, {}, 31);
    for (std::size_t m = 0; m < k.rows(); ++m) {
      for (std::size_t kk = 0; kk < k.cols(); ++kk) {
        if (!k.in_support(m, kk)) {
          REQUIRE(k.at(m, kk) == cx(0.0, 0.0));
        } else {
          REQUIRE(std::abs(k.at(m, kk) - k.at(m, m - kk)) <= 1e-15);
        }
      }
    }
  }
}

TEST_CASE("kernel parameter validation") {
  KernelParams bad;
  bad.kappa_width = 0.0;
  REQUIRE_THROWS_AS(make_kernel(KernelKind::Separable, bad, 10), std::invalid_argument);
  KernelParams bad2;
  bad2.sigma = -1.0;
  REQUIRE_THROWS_AS(make_kernel(KernelKind::GaussPhase, bad2, 10), std::invalid_argument);
  REQUIRE_THROWS_AS(make_kernel(KernelKind::Unit, {}, 1), std::invalid_argument);
}

TEST_CASE("targets are normalized Gaussian bumps") {
  for (auto kind : {TargetKind::GaussChirp, TargetKind::Polyphase}) {
    const std::size_t N = 201;
    const ComplexSignal f = make_target(kind, N);
    const RealSignal amp = modulus(f);
    REQUIRE_THAT(amp.values[(N - 1) / 2], WithinAbs(1.0, 1e-15));  // peak at tau = 1/2
    REQUIRE(amp.values.front() < 1e-8);
    REQUIRE(amp.values.back() < 1e-8);
    for (double v : amp.values) {
      REQUIRE(v >= 0.0);
      REQUIRE(std::isfinite(v));
    }
    REQUIRE(norm(f) > 0.0);
  }
}

TEST_CASE("targets drive the forward maps above the guard level") {
  const std::size_t N = 101;
  const ComplexSignal f = make_target(TargetKind::GaussChirp, N);
  for (auto kind : {KernelKind::Unit, KernelKind::Separable, KernelKind::GaussPhase}) {
    const KernelGrid k = make_kernel(kind, {}, N);
    REQUIRE(norm(forward(k, f)) > 1e-10);
  }
}

TEST_CASE("relative noise has an exact norm ratio") {
  const ComplexSignal f = make_target(TargetKind::GaussChirp, 150);

  const ComplexSignal same = add_relative_noise(f, 0.0, 5);
  for (std::size_t i = 0; i < f.values.size(); ++i) REQUIRE(same.values[i] == f.values[i]);

  const ComplexSignal noisy = add_relative_noise(f, 0.01, 5);
  ComplexSignal diff(f.grid);
  for (std::size_t i = 0; i < f.values.size(); ++i) diff.values[i] = noisy.values[i] - f.values[i];
  REQUIRE_THAT(norm(diff) / norm(f), WithinAbs(0.01, 1e-12));

  const ComplexSignal again = add_relative_noise(f, 0.01, 5);
  for (std::size_t i = 0; i < f.values.size(); ++i) REQUIRE(again.values[i] == noisy.values[i]);

  const ComplexSignal other_seed = add_relative_noise(f, 0.01, 6);
  bool differs = false;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    if (other_seed.values[i] != noisy.values[i]) differs = true;
  }
  REQUIRE(differs);

  REQUIRE_THROWS_AS(add_relative_noise(f, -0.5, 1), std::invalid_argument);
}

TEST_CASE("relative noise on real signals") {
  RealSignal a(x_grid(120));
  for (std::size_t i = 0; i < a.grid.count; ++i) a.values[i] = 1.0 + std::sin(6.0 * a.grid.node(i));
  const RealSignal noisy = add_relative_noise(a, 0.02, 9);
  RealSignal diff(a.grid);
  for (std::size_t i = 0; i < a.grid.count; ++i) diff.values[i] = noisy.values[i] - a.values[i];
  REQUIRE_THAT(norm(diff) / norm(a), WithinAbs(0.02, 1e-12));
}

TEST_CASE("phase data generation") {
  const std::size_t N = 90;
  const KernelGrid k = make_kernel(KernelKind::GaussPhase, {}, N);
  const ComplexSignal y = forward(k, make_target(TargetKind::GaussChirp, N));

  const RealSignal exact = make_phase_data(y, 0.0, 1);
  const RealSignal ref = phase(y);
  for (std::size_t i = 0; i < y.values.size(); ++i) {
    if (std::abs(y.values[i]) < 1e-12) {
      REQUIRE(exact.values[i] == 0.0);
    } else {
      REQUIRE(exact.values[i] == ref.values[i]);
    }
  }

  const RealSignal noisy = make_phase_data(y, 0.05, 1);
  RealSignal theta(noisy.grid);
  for (std::size_t i = 0; i < noisy.values.size(); ++i) {
    theta.values[i] = noisy.values[i] - exact.values[i];
  }
  // The pseudo-metric never amplifies the additive phase noise.
  REQUIRE(phase_pseudometric(noisy, exact) <= norm(theta) * (1.0 + 1e-12));
  REQUIRE_THAT(norm(theta) / norm(exact), WithinAbs(0.05, 1e-12));

  const RealSignal again = make_phase_data(y, 0.05, 1);
  for (std::size_t i = 0; i < noisy.values.size(); ++i) {
    REQUIRE(again.values[i] == noisy.values[i]);
  }
}

TEST_CASE("oscillation probe basics") {
  const ComplexSignal h1 = oscillation_probe(1, 64);
  for (std::size_t i = 0; i < h1.values.size(); ++i) {
    const double tau = h1.grid.node(i);
    REQUIRE(std::abs(h1.values[i] - std::polar(1.0, tau * tau)) <= 1e-15);
  }
  for (std::size_t n : {1u, 2u, 4u}) {
    const ComplexSignal h = oscillation_probe(n, 10 * n * n + 5);
    REQUIRE_THAT(norm(h), WithinAbs(1.0, 1e-12));
  }
  REQUIRE_THROWS_AS(oscillation_probe(4, 100), std::invalid_argument);  // 100 < 10 * 16
}

TEST_CASE("probe loses correlation against constants as n grows") {
  const std::size_t N = 10 * 64 + 1;
  ComplexSignal ones(x_grid(N));
  for (auto& v : ones.values) v = 1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t n : {2u, 4u, 8u}) {
    const ComplexSignal h = oscillation_probe(n, N);
    const double corr = std::abs(inner_product(h, ones));
    REQUIRE(corr < prev);
    prev = corr;
  }
}

TEST_CASE("image differences shrink while perturbations stay fixed") {
  const std::size_t N = 2560;
  const KernelGrid k = make_kernel(KernelKind::Unit, {}, N);
  const ComplexSignal target = make_target(TargetKind::GaussChirp, N);
  const ComplexSignal base = forward(k, target);
  const double radius = 0.1;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t n : {4u, 8u, 16u}) {
    const ComplexSignal h = oscillation_probe(n, N);
    ComplexSignal perturbed = target;
    for (std::size_t i = 0; i < N; ++i) perturbed.values[i] += radius * h.values[i];
    ComplexSignal pert_only(x_grid(N));
    for (std::size_t i = 0; i < N; ++i) pert_only.values[i] = radius * h.values[i];
    REQUIRE_THAT(norm(pert_only), WithinAbs(radius, 1e-12));

    const ComplexSignal image = forward(k, perturbed);
    ComplexSignal diff(image.grid);
    for (std::size_t m = 0; m < diff.values.size(); ++m) {
      diff.values[m] = image.values[m] - base.values[m];
    }
    const double dist = norm(diff);
    REQUIRE(dist < prev);
    prev = dist;
  }
}

TEST_CASE("frequency axis normalization") {
  const FrequencyBand band;  // 3.5e15 .. 4.1e15, cw 3.86e15
  REQUIRE(normalize_frequency_axis(band, 3.5e15, Space::X) == 0.0);
  REQUIRE_THAT(normalize_frequency_axis(band, 4.1e15, Space::X), WithinAbs(1.0, 1e-12));
  const double low_sd = 2.0 * band.omega_low - band.omega_cw;
  REQUIRE_THAT(normalize_frequency_axis(band, low_sd, Space::Y), WithinAbs(0.0, 1e-12));
  const double up_sd = 2.0 * band.omega_up - band.omega_cw;
  REQUIRE_THAT(normalize_frequency_axis(band, up_sd, Space::Y), WithinAbs(2.0, 1e-12));
  REQUIRE_THROWS_AS(normalize_frequency_axis(band, 3.4e15, Space::X), std::invalid_argument);
  REQUIRE_THROWS_AS(normalize_frequency_axis(band, 8.0e15, Space::Y), std::invalid_argument);
  FrequencyBand bad;
  bad.omega_up = bad.omega_low;
  REQUIRE_THROWS_AS(normalize_frequency_axis(bad, 3.5e15, Space::X), std::invalid_argument);
}
