#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "wdistill/amplitudes.hpp"
#include "wdistill/errors.hpp"
#include "wdistill/quadrature.hpp"

using namespace wdistill;

namespace {

const double T = 1.0;
const FieldParams massless{};

DetectorSpec det(std::string label, double x, double gap, WindowSpec w) {
  return DetectorSpec{std::move(label), {x, 0.0, 0.0}, gap, w};
}

WindowSpec gauss(double amp = 1.0) { return WindowSpec::gaussian(amp, T, T / 6); }

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("emission is the integral of a perfect square and nonnegative") {
  const auto a = det("A", 0.0, 5.0, gauss());
  const double e = exchange_amplitude(a, Sign::minus, a, Sign::plus, massless);
  const WindowTransform ft(a.window);
  auto sq = [&](double k) {
    const double f = ft(a.gap + k);
    return spectral_weight(k, massless) * f * f;
  };
  // Truncated at k = 3000; the discarded tail is below 1e-8 of the total.
  const auto direct = quad::integrate_breaks<double>(sq, quad::uniform_breaks(0.0, 3000.0, 3000), {0.0, 1e-11});
  CHECK(e > 0.0);
  CHECK(rel(e, direct.value) < 1e-6);

  for (const auto& w : {WindowSpec::cosine_bump(0.8, 1.5), WindowSpec::superoscillatory(1.0, T, 20.0, 3.0, 8)}) {
    const auto d = det("S", 0.0, 2.0, w);
    CHECK(exchange_amplitude(d, Sign::minus, d, Sign::plus, massless) >= 0.0);
  }
}

TEST_CASE("exchange amplitudes decay as the inverse square distance for a massless field") {
  const auto a = det("A", 0.0, 4.0, gauss());
  double prev = std::numeric_limits<double>::infinity();
  double near = 0.0;
  for (double L : {2.0, 8.0, 32.0, 128.0, 1000.0}) {
    const auto b = det("B", L * T, 4.0, gauss());
    const double v = std::abs(exchange_amplitude(a, Sign::plus, b, Sign::plus, massless));
    CHECK(v < prev);
    prev = v;
    if (L == 2.0) near = v;
  }
  // Leading large-L behaviour eps~_A(Omega) eps~_B(Omega) / (4 pi^2 L^2).
  const double lead = std::pow(window_fourier_transform(a.window, a.gap), 2) /
                      (4.0 * std::numbers::pi * std::numbers::pi * 1e6);
  CHECK(rel(prev, lead) < 1e-4);
  CHECK(prev / near == doctest::Approx(4e-6).epsilon(0.1));
}

TEST_CASE("massive exchange amplitudes fall below 1e-8 of their L=2T value at L=1000T") {
  const FieldParams massive{1.0 / T, 1e-4};
  const auto a = det("A", 0.0, 4.0, gauss());
  const double near = exchange_amplitude(a, Sign::plus, det("B", 2.0 * T, 4.0, gauss()), Sign::plus, massive);
  const double far = exchange_amplitude(a, Sign::plus, det("B", 1000.0 * T, 4.0, gauss()), Sign::plus, massive);
  CHECK(std::abs(far) <= 1e-8 * std::abs(near));
}

TEST_CASE("frequency-domain amplitudes match the time-domain oracle") {
  struct Case {
    DetectorSpec i;
    Sign a;
    DetectorSpec j;
    Sign b;
  };
  const Case cases[] = {
      {det("A", 0.0, 3.0, gauss()), Sign::plus, det("B", 2.0, 5.0, gauss(0.7)), Sign::plus},
      {det("A", 0.0, 2.0, WindowSpec::superoscillatory(1.0, T, 20.0, 3.0, 8)), Sign::minus,
       det("B", 1.5, 6.0, gauss()), Sign::plus},
      {det("A", 0.0, 1.0, WindowSpec::cosine_bump(1.0, 0.8)), Sign::plus,
       det("B", 3.0, 2.5, WindowSpec::cosine_bump(1.2, 1.2)), Sign::minus},
      {det("A", 0.0, 7.0, gauss()), Sign::minus, det("B", 1.1, 7.0, gauss()), Sign::minus},
  };
  for (const auto& c : cases) {
    const auto spectral = exchange_amplitude_detailed(c.i, c.a, c.j, c.b, massless);
    const auto oracle = amplitude_time_domain_oracle(c.i, c.a, c.j, c.b);
    CHECK(rel(spectral.value, oracle.value) < 1e-6);
    CHECK(oracle.imag_residual < 1e-6 * std::abs(oracle.value));
  }
}

TEST_CASE("operator order does not matter at spacelike separation") {
  const auto a = det("A", 0.0, 3.0, gauss());
  const auto b = det("B", 2.5, 4.0, WindowSpec::cosine_bump(1.0, 1.4));
  for (Sign s : {Sign::minus, Sign::plus}) {
    for (Sign r : {Sign::minus, Sign::plus}) {
      const double ab = amplitude_time_domain_oracle(a, s, b, r).value;
      const double ba = amplitude_time_domain_oracle(b, r, a, s).value;
      CHECK(rel(ab, ba) < 1e-6);
      CHECK(rel(exchange_amplitude(a, s, b, r, massless), exchange_amplitude(b, r, a, s, massless)) < 1e-6);
    }
  }
}

TEST_CASE("a zero window gives zero amplitudes") {
  const auto z = det("Z", 0.0, 3.0, gauss(0.0));
  const auto b = det("B", 2.0, 3.0, gauss());
  CHECK(amplitude_time_domain_oracle(z, Sign::plus, b, Sign::plus).value == 0.0);
  CHECK(exchange_amplitude(z, Sign::plus, b, Sign::plus, massless) == 0.0);
  CHECK(self_energy_real(z, massless) == 0.0);
}

TEST_CASE("oracle rejects coincident positions") {
  const auto a = det("A", 0.0, 3.0, gauss());
  CHECK_THROWS_AS(amplitude_time_domain_oracle(a, Sign::minus, a, Sign::plus), DomainError);
}

TEST_CASE("self-energy equals the emission amplitude and falls with the gap") {
  double prev = std::numeric_limits<double>::infinity();
  for (double gap : {2.0, 4.0, 8.0, 16.0, 32.0}) {
    const auto a = det("A", 0.0, gap, gauss());
    const double s = self_energy_real(a, massless);
    CHECK(s == exchange_amplitude(a, Sign::minus, a, Sign::plus, massless));
    CHECK(s < prev);
    prev = s;
  }
}

TEST_CASE("self-energy agrees with the time-ordered double integral") {
  for (const auto& a : {det("A", 0.0, 3.0, gauss()), det("A", 0.0, 10.0, WindowSpec::cosine_bump(1.0, 1.3)),
                        det("A", 0.0, 2.0, WindowSpec::superoscillatory(0.8, T, 16.0, 2.0, 6))}) {
    const double s = self_energy_real(a, massless);
    const auto oracle = self_energy_time_ordered_oracle(a);
    CHECK(rel(s, oracle.value) < 1e-5);
  }
}

TEST_CASE("table for three congruent detectors in a line") {
  const double L = 5.0 * T;
  const std::vector<DetectorSpec> d = {det("A", 0.0, 4.0, gauss()), det("B", L, 4.0, gauss()),
                                       det("C", 2.0 * L, 4.0, gauss())};
  const auto t = build_amplitude_table(d, massless);
  CHECK(rel(t.value(0, Sign::plus, 1, Sign::plus), t.value(1, Sign::plus, 2, Sign::plus)) < 1e-6);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(t.value(i, Sign::minus, i, Sign::plus) >= 0.0);
    CHECK(t.self_energy[i] == t.value(i, Sign::minus, i, Sign::plus));
    for (std::size_t j = 0; j < 3; ++j) {
      for (Sign a : {Sign::minus, Sign::plus}) {
        for (Sign b : {Sign::minus, Sign::plus}) {
          if (i != j) CHECK(rel(t.value(i, a, j, b), t.value(j, b, i, a)) < 1e-6);
        }
      }
    }
  }
  CHECK(t.flags.causally_disconnected);
  CHECK(t.flags.min_separation_ratio == doctest::Approx(5.0));
  CHECK(t.flags.max_imag_residual < 1e-10);
}

TEST_CASE("two-detector table holds every sign and pair family") {
  const auto t = build_amplitude_table({det("A", 0.0, 3.0, gauss()), det("B", 2.0, 3.0, gauss())}, massless);
  int present = 0;
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      for (Sign a : {Sign::minus, Sign::plus}) {
        for (Sign b : {Sign::minus, Sign::plus}) present += t.has(i, a, j, b) ? 1 : 0;
      }
    }
  }
  CHECK(present == 16);
  CHECK(t.value(0, Sign::minus, 0, Sign::minus) == t.value(0, Sign::plus, 0, Sign::plus));
}

TEST_CASE("causally connected detectors are rejected unless waived") {
  const std::vector<DetectorSpec> d = {det("A", 0.0, 3.0, gauss()), det("B", 0.5, 3.0, gauss())};
  try {
    build_amplitude_table(d, massless);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    REQUIRE(e.violations().size() == 1);
    CHECK(e.violations()[0].find("A and B") != std::string::npos);
  }
  const auto t = build_amplitude_table(d, massless, {}, {true});
  CHECK_FALSE(t.flags.causally_disconnected);
  CHECK(t.causality_waived);
}

TEST_CASE("flat text round trip is exact") {
  auto t = make_synthetic_table({3, 2, 0.0123456789012345, 37.0, 0.25});
  t.set(0, Sign::minus, 1, Sign::plus, -1.0 / 3.0, 1e-17);
  const auto back = AmplitudeTable::from_text(t.to_text());
  CHECK(back.labels() == t.labels());
  CHECK(back.synthetic);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.self_energy[i] == t.self_energy[i]);
    for (std::size_t j = 0; j < 3; ++j) {
      for (Sign a : {Sign::minus, Sign::plus}) {
        for (Sign b : {Sign::minus, Sign::plus}) {
          CHECK(back.value(i, a, j, b) == t.value(i, a, j, b));
          CHECK(back.error(i, a, j, b) == t.error(i, a, j, b));
        }
      }
    }
  }
}

TEST_CASE("flat text errors and missing entries") {
  CHECK_THROWS_AS(AmplitudeTable::from_text("A + A -\n"), ValidationError);
  CHECK_THROWS_AS(AmplitudeTable::from_text("# labels A B\nA * B + 1\n"), ValidationError);
  CHECK_THROWS_AS(AmplitudeTable::from_text("# labels A B\nA + Q + 1\n"), ValidationError);
  CHECK_THROWS_AS(AmplitudeTable::from_text("# labels A B\nA + B + 1x\n"), ValidationError);
  const auto t = AmplitudeTable::from_text("# labels A B\nA + B + 0.5\n");
  CHECK(t.value(0, Sign::plus, 1, Sign::plus) == 0.5);
  try {
    t.value(1, Sign::minus, 0, Sign::plus);
    FAIL("expected a lookup error");
  } catch (const LookupError& e) {
    CHECK(std::string(e.what()).find("d[B-,A+]") != std::string::npos);
  }
  CHECK_THROWS_AS(t.index_of("Z"), LookupError);
}

TEST_CASE("synthetic tables follow the dominance parameter") {
  const auto t = make_synthetic_table({3, 2, 0.01, 1e3, 0.1});
  CHECK(t.labels() == std::vector<std::string>{"A", "B", "C"});
  CHECK(t.value(0, Sign::plus, 2, Sign::plus) == 0.01);
  CHECK(t.value(2, Sign::minus, 1, Sign::minus) == 0.01);
  CHECK(t.value(0, Sign::plus, 1, Sign::plus) == doctest::Approx(1e-5));
  CHECK(t.value(0, Sign::minus, 1, Sign::plus) == doctest::Approx(1e-6));
  CHECK(t.value(1, Sign::minus, 1, Sign::plus) == doctest::Approx(1e-5));
  CHECK(dominance_ratio(t, 2).ratio == doctest::Approx(1e3));

  const auto ideal = make_synthetic_table({4, 3, 0.02, std::numeric_limits<double>::infinity(), 0.1});
  CHECK(ideal.value(0, Sign::minus, 0, Sign::plus) == 0.0);
  CHECK(ideal.value(1, Sign::plus, 3, Sign::plus) == 0.02);
  CHECK(std::isinf(dominance_ratio(ideal, 3).ratio));

  CHECK_THROWS_AS(make_synthetic_table({3, 5, 0.01, 10.0, 0.1}), ValidationError);
  CHECK_THROWS_AS(make_synthetic_table({3, 2, 0.01, -1.0, 0.1}), ValidationError);
}

TEST_CASE("amplitudes are bilinear in the window amplitudes") {
  const double c = 2.5;
  const auto a = det("A", 0.0, 3.0, gauss());
  const auto a2 = det("A", 0.0, 3.0, gauss(c));
  const auto b = det("B", 2.0, 4.0, gauss());
  CHECK(rel(exchange_amplitude(a2, Sign::plus, b, Sign::plus, massless),
            c * exchange_amplitude(a, Sign::plus, b, Sign::plus, massless)) < 1e-8);
  CHECK(rel(exchange_amplitude(a2, Sign::minus, a2, Sign::plus, massless),
            c * c * exchange_amplitude(a, Sign::minus, a, Sign::plus, massless)) < 1e-8);
}

TEST_CASE("scaling one detector matches rebuilding with a scaled window") {
  const double c = 0.3;
  const auto t = build_amplitude_table({det("A", 0.0, 3.0, gauss()), det("B", 2.0, 4.0, gauss())}, massless);
  const auto u = build_amplitude_table({det("A", 0.0, 3.0, gauss(c)), det("B", 2.0, 4.0, gauss())}, massless);
  const auto s = scale_detector(t, 0, c);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      for (Sign a : {Sign::minus, Sign::plus}) {
        for (Sign b : {Sign::minus, Sign::plus}) CHECK(rel(s.value(i, a, j, b), u.value(i, a, j, b)) < 1e-8);
      }
    }
  }
  CHECK(rel(s.self_energy[0], u.self_energy[0]) < 1e-8);
  CHECK(rel(s.flags.min_emission, u.flags.min_emission) < 1e-8);
  CHECK_THROWS_AS(scale_detector(t, 2, c), ValidationError);
  CHECK_THROWS_AS(scale_detector(t, 0, 0.0), ValidationError);
}

TEST_CASE("detector validation collects every violation") {
  auto bad = det("", 0.0, -1.0, WindowSpec::gaussian(1.0, T, -1.0));
  bad.position[1] = std::numeric_limits<double>::quiet_NaN();
  try {
    validate_detectors({bad, det("A", 1.0, 1.0, gauss()), det("A", 2.0, 1.0, gauss())});
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.violations().size() >= 5);
  }
  CHECK_THROWS_AS(parse_sign('x'), ValidationError);
}
