#include "wdistill/field_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "wdistill/errors.hpp"
#include "wdistill/quadrature.hpp"

namespace wdistill {

namespace {
constexpr double kFourPiSq = 4.0 * std::numbers::pi * std::numbers::pi;
}

void validate(const FieldParams& p) {
  std::vector<std::string> bad;
  if (!(std::isfinite(p.mass) && p.mass >= 0.0)) bad.push_back("field mass must be finite and >= 0");
  if (!(std::isfinite(p.regulator) && p.regulator > 0.0)) bad.push_back("field regulator must be > 0");
  if (!bad.empty()) throw ValidationError(bad);
}

void validate(const QuadControls& q) {
  std::vector<std::string> bad;
  if (!(q.rel_tol > 0.0 || q.abs_tol > 0.0)) bad.push_back("quadrature needs rel_tol > 0 or abs_tol > 0");
  if (q.rel_tol < 0.0 || q.abs_tol < 0.0) bad.push_back("quadrature tolerances must be >= 0");
  if (!(q.tail_tol > 0.0)) bad.push_back("quadrature tail_tol must be > 0");
  if (!(q.k_max >= 0.0)) bad.push_back("quadrature k_max must be >= 0 (0 = automatic)");
  if (q.max_panels < 16) bad.push_back("quadrature max_panels must be >= 16");
  if (!bad.empty()) throw ValidationError(bad);
}

double spherical_j0(double x) {
  const double ax = std::abs(x);
  if (ax < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

double spectral_weight(double k, const FieldParams& p) {
  if (k <= 0.0) return 0.0;
  const double omega = std::hypot(k, p.mass);
  return k * k / (kFourPiSq * omega);
}

std::complex<double> wightman_massless_closed(SpacetimeInterval s, double eps_reg) {
  if (!(eps_reg > 0.0)) throw ValidationError("closed-form Wightman function needs eps_reg > 0");
  const std::complex<double> d(s.dt, -eps_reg);
  return 1.0 / (kFourPiSq * (s.r * s.r - d * d));
}

namespace {

// Real-axis quadrature up to a cutoff, with the remainder bounded by
// |integrand| <= k/(4 pi^2) exp(-k eps) min(1, 1/(k r)).
KernelResult real_axis(SpacetimeInterval s, const FieldParams& p, const QuadControls& q) {
  const double eps = p.regulator;
  // exp(-k eps) * k reaches tail_tol relative to its peak near k = 1/eps.
  double k_max = q.k_max;
  if (k_max == 0.0) k_max = (std::log(1.0 / q.tail_tol) + 10.0) / eps;
  const double rate = s.r + std::abs(s.dt);
  // One oscillation of the dominant phase per Kronrod panel.
  const double width = 2.0 * std::numbers::pi / std::max(rate, 1.0 / k_max);
  const int panels = static_cast<int>(std::min<double>(std::ceil(k_max / width), q.max_panels / 4));

  auto f = [&](double k) {
    const double omega = std::hypot(k, p.mass);
    const double amp = spectral_weight(k, p) * spherical_j0(k * s.r) * std::exp(-omega * eps);
    return std::complex<double>(amp * std::cos(omega * s.dt), -amp * std::sin(omega * s.dt));
  };
  auto r = quad::integrate_breaks<std::complex<double>>(
      f, quad::uniform_breaks(0.0, k_max, std::max(panels, 1)), {q.abs_tol, q.rel_tol}, q.max_panels);

  const double e = std::exp(-k_max * eps);
  const double tail = (s.r > 0.0) ? e / (kFourPiSq * s.r * eps)
                                  : e * (k_max / eps + 1.0 / (eps * eps)) / kFourPiSq;
  KernelResult out;
  out.value = r.value;
  out.k_upper = k_max;
  out.tail_bound = tail;
  out.error = r.error + tail;
  out.evaluations = r.evaluations;
  const double target = std::max(q.abs_tol, q.rel_tol * std::abs(r.value));
  if (!r.converged || tail > std::max(target, q.tail_tol * std::abs(r.value))) {
    throw NumericalError("spectral Wightman integral did not converge", out.error);
  }
  return out;
}

// Writing j0(kr) = (e^{ikr} - e^{-ikr}) / (2ikr), each piece carries the phase
// e^{i lambda k} with lambda = +-r - dt. Beyond k0 the piece is continued
// along k = k0 + i sign(lambda) t, where it decays like e^{-|lambda| t}; the
// integrand is analytic for Re k > 0 and the closing arc vanishes.
KernelResult rotated(SpacetimeInterval s, const FieldParams& p, const QuadControls& q, double k0) {
  using cd = std::complex<double>;
  const double eps = p.regulator;
  const double m2 = p.mass * p.mass;

  auto head = [&](double k) {
    const double omega = std::hypot(k, p.mass);
    const double amp = spectral_weight(k, p) * spherical_j0(k * s.r) * std::exp(-omega * eps);
    return cd(amp * std::cos(omega * s.dt), -amp * std::sin(omega * s.dt));
  };
  const double rate = s.r + std::abs(s.dt);
  const auto head_breaks = quad::uniform_breaks(
      0.0, k0, std::max(1, static_cast<int>(std::ceil(k0 * rate / (2.0 * std::numbers::pi)))));

  struct Piece {
    double sign;    // +1 for e^{ikr}, -1 for e^{-ikr}, 0 when r = 0
    double lambda;  // real-axis phase rate
  };
  std::vector<Piece> pieces;
  if (s.r > 0.0) {
    pieces = {{1.0, s.r - s.dt}, {-1.0, -s.r - s.dt}};
  } else {
    pieces = {{0.0, -s.dt}};
  }
  const double decades = std::log(1.0 / q.tail_tol) + 10.0;

  auto attempt = [&](quad::Tolerance tol, bool& converged) {
    auto h = quad::integrate_breaks<cd>(head, head_breaks, tol, q.max_panels);
    KernelResult out;
    out.value = h.value;
    out.error = h.error;
    out.evaluations = h.evaluations;
    out.k_upper = k0;
    converged = h.converged;
    for (const auto& pc : pieces) {
      const double dir = (pc.lambda > 0.0) ? 1.0 : -1.0;
      const double rate_t = std::abs(pc.lambda);
      auto g = [&](double t) {
        const cd k(k0, dir * t);
        const cd omega = std::sqrt(k * k + m2);
        cd v = k * k / (kFourPiSq * omega) * std::exp(-omega * eps - cd(0.0, 1.0) * omega * s.dt);
        if (pc.sign != 0.0) v *= pc.sign * std::exp(cd(0.0, pc.sign * s.r) * k) / (cd(0.0, 2.0 * s.r) * k);
        return v * cd(0.0, dir);  // dk = i dir dt
      };
      const double t_max = decades / rate_t;
      auto r = quad::integrate_breaks<cd>(g, quad::uniform_breaks(0.0, t_max, static_cast<int>(std::ceil(decades))),
                                          tol, q.max_panels);
      // |g| falls like e^{-|lambda| t} times a polynomial of degree <= 1.
      out.tail_bound += std::abs(g(t_max)) * (1.0 / rate_t + 1.0 / (rate_t * rate_t * (k0 + t_max)));
      out.value += r.value;
      out.error += r.error;
      out.evaluations += r.evaluations + 1;
      converged = converged && r.converged;
    }
    out.error += out.tail_bound;
    return out;
  };

  // The pieces can cancel, so a retry uses absolute targets from the total.
  bool converged = false;
  KernelResult out = attempt({q.abs_tol / 3.0, q.rel_tol / 3.0}, converged);
  for (int retry = 0; retry < 3; ++retry) {
    const double target = std::max(q.abs_tol, q.rel_tol * std::abs(out.value));
    if (converged && out.error <= target) return out;
    const long spent = out.evaluations;
    out = attempt({target / (4.0 * (pieces.size() + 1)), 0.0}, converged);
    out.evaluations += spent;
  }
  const double target = std::max(q.abs_tol, q.rel_tol * std::abs(out.value));
  if (!converged || out.error > target) {
    throw NumericalError("spectral Wightman integral did not converge", out.error);
  }
  return out;
}

}  // namespace

KernelResult wightman_spectral_detailed(SpacetimeInterval s, const FieldParams& p,
                                        const QuadControls& q) {
  validate(p);
  validate(q);
  if (!(s.r >= 0.0)) throw ValidationError("spatial separation must be >= 0");
  // The rotated contour needs every piece to oscillate faster than the
  // regulator damps it; near the light cone, or with an explicit cutoff, the
  // real axis is integrated directly.
  const double slowest = (s.r > 0.0) ? std::abs(std::abs(s.r) - std::abs(s.dt)) : std::abs(s.dt);
  if (q.k_max > 0.0 || !(slowest >= 10.0 * p.regulator)) return real_axis(s, p, q);
  const double k0 = std::max(2.0 * p.mass, 2.0 * std::numbers::pi / (s.r + std::abs(s.dt)));
  return rotated(s, p, q, k0);
}

std::complex<double> wightman_spectral(SpacetimeInterval s, const FieldParams& p,
                                       const QuadControls& q) {
  return wightman_spectral_detailed(s, p, q).value;
}

}  // namespace wdistill
