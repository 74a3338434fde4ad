#include <cmath>
#include <random>

#include "doctest.h"
#include "wdistill/errors.hpp"
#include "wdistill/quadrature.hpp"
#include "wdistill/windows.hpp"

using namespace wdistill;

namespace {

const double T = 1.0;

std::vector<WindowSpec> zoo() {
  return {WindowSpec::gaussian(1.0, T, T / 6), WindowSpec::gaussian(0.7, 2.0, 0.25),
          WindowSpec::cosine_bump(1.3, T), WindowSpec::superoscillatory(1.0, T, 20.0, 4.0, 10),
          WindowSpec::superoscillatory(0.5, 1.5, 12.0, 2.0, 6)};
}

}  // namespace

TEST_CASE("window values at the peak and outside the support") {
  CHECK(evaluate_window(WindowSpec::gaussian(1.0, T, T / 6), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  for (const auto& w : zoo()) {
    CHECK(evaluate_window(w, 0.6 * w.duration) == 0.0);
    CHECK(evaluate_window(w, -0.6 * w.duration) == 0.0);
    CHECK(evaluate_window(w, w.half_width()) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("windows are exactly even and vanish outside the support on random samples") {
  std::mt19937_64 rng(7);
  for (const auto& w : zoo()) {
    std::uniform_real_distribution<double> u(-w.duration, w.duration);
    for (int k = 0; k < 2000; ++k) {
      const double t = u(rng);
      REQUIRE(evaluate_window(w, t) == evaluate_window(w, -t));
      if (std::abs(t) > w.half_width()) REQUIRE(evaluate_window(w, t) == 0.0);
    }
  }
  const auto so = WindowSpec::superoscillatory(1.0, T, 20.0, 4.0, 10);
  CHECK(evaluate_window(so, 0.123) == evaluate_window(so, -0.123));
}

TEST_CASE("validation accepts and rejects per parameter ranges") {
  CHECK_FALSE(validate_window(WindowSpec::gaussian(1.0, T, -1.0)).accepted);
  auto ok = validate_window(WindowSpec::gaussian(0.01, T, T / 6));
  CHECK(ok.accepted);
  CHECK(ok.symmetric);
  CHECK(ok.supported);
  CHECK_FALSE(validate_window(WindowSpec::superoscillatory(1.0, T, 10.0, 0.5, 10)).accepted);
  CHECK_FALSE(validate_window(WindowSpec::cosine_bump(1.0, 0.0)).accepted);
  CHECK_FALSE(validate_window(WindowSpec::superoscillatory(1.0, T, 0.0, 2.0, 0)).accepted);
  auto v = validate_window(WindowSpec::superoscillatory(1.0, -1.0, -2.0, 0.5, 0));
  CHECK(v.violations.size() == 4);
}

TEST_CASE("transform of a zero window vanishes and the transform is even") {
  CHECK(window_fourier_transform(WindowSpec::gaussian(0.0, T, T / 6), 3.7) == 0.0);
  for (const auto& w : zoo()) {
    for (double nu : {0.5, 7.0, 63.0}) {
      const double a = window_fourier_transform(w, nu);
      const double b = window_fourier_transform(w, -nu);
      CHECK(std::abs(a - b) <= 1e-10 * window_l1_norm(w));
      CHECK(std::abs(a) <= window_l1_norm(w) * (1 + 1e-12));
    }
  }
}

TEST_CASE("gaussian transform at zero frequency matches a direct Gauss-Legendre integral") {
  const auto w = WindowSpec::gaussian(1.0, T, T / 6);
  const auto gl = quad::gauss_legendre(200);
  double direct = 0.0;
  for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
    direct += 0.5 * T * gl.weights[k] * evaluate_window(w, 0.5 * T * gl.nodes[k]);
  }
  CHECK(window_fourier_transform(w, 0.0) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("transform scales linearly with the amplitude") {
  for (const auto& w : zoo()) {
    for (double c : {-3.0, 0.125, 17.0}) {
      const double a = window_fourier_transform(w.scaled(c), 9.0);
      const double b = c * window_fourier_transform(w, 9.0);
      CHECK(std::abs(a - b) <= 1e-12 * std::abs(b) + 1e-300);
    }
  }
}

TEST_CASE("the wrong family is refused by the superoscillation report") {
  CHECK_THROWS_AS(superoscillation_report(WindowSpec::cosine_bump(1.0, T), 1.0), DomainError);
}

TEST_CASE("superoscillation report on the reference examples") {
  const double w0 = 40.0;
  auto plain = superoscillation_report(WindowSpec::superoscillatory(1.0, T, w0, 1.0, 10), w0);
  CHECK(plain.ratio == doctest::Approx(1.0).epsilon(1e-3));
  auto fast = superoscillation_report(WindowSpec::superoscillatory(1.0, T, w0, 4.0, 20), w0);
  CHECK(fast.ratio > 1.0);
  CHECK(fast.max_local_rate == doctest::Approx(4.0 * w0).epsilon(0.1));
  auto banded = superoscillation_report(WindowSpec::superoscillatory(1.0, T, w0, 2.0, 10), 10 * 2.0 * w0);
  CHECK(banded.ratio < 1.0);
}

TEST_CASE("analytic derivatives agree with finite differences") {
  for (const auto& w : zoo()) {
    for (double t : {0.0, 0.1, -0.27, 0.9 * w.half_width()}) {
      for (int m = 1; m <= 4; ++m) {
        const double h = 1e-4 * w.duration;
        const double fd = (window_derivative(w, t + h, m - 1) - window_derivative(w, t - h, m - 1)) / (2 * h);
        const double an = window_derivative(w, t, m);
        const double scale = std::abs(window_derivative(w, 0.0, m)) + std::abs(an) + 1.0;
        CHECK(std::abs(fd - an) <= 1e-5 * scale * std::pow(window_internal_rate(w), 2));
      }
    }
  }
  // m = 0 through the exponential sum agrees with the direct power form.
  const auto so = WindowSpec::superoscillatory(1.0, T, 20.0, 4.0, 10);
  for (double t : {0.0, 0.05, 0.31}) {
    CHECK(window_derivative(so, t, 0) == doctest::Approx(evaluate_window(so, t)).epsilon(1e-12));
  }
}

TEST_CASE("fast transform agrees with the adaptive reference on both sides of the switch") {
  for (const auto& w : zoo()) {
    WindowTransform ft(w);
    const double scale = window_l1_norm(w);
    const double sw = ft.switch_frequency();
    for (double nu : {0.0, 3.0, 41.0, 0.5 * sw, 0.999 * sw, 1.001 * sw, 1.7 * sw}) {
      const double ref = window_fourier_transform(w, nu);
      CHECK(std::abs(ft(nu) - ref) <= 2e-10 * scale);
      CHECK(ft(nu) == ft(-nu));
    }
    // Where both are valid the two fast branches coincide.
    CHECK(std::abs(ft.sampled(1.2 * sw) - ft.asymptotic(1.2 * sw)) <= 1e-10 * scale);
  }
}
