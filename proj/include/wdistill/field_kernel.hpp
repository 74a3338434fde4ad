#pragma once

// Vacuum Wightman function W(dt, r) = <0|phi(x, t) phi(x', t')|0> of a free
// Klein-Gordon field in 3+1 dimensions, dt = t - t', r = |x - x'|.

#include <complex>

namespace wdistill {

struct FieldParams {
  double mass = 0.0;
  // i*eps prescription scale. The closed form uses it as dt -> dt - i eps; the
  // spectral form uses the equivalent Abel factor exp(-omega eps), so both
  // representations describe the same regulated kernel.
  double regulator = 1e-4;
};

struct SpacetimeInterval {
  double dt = 0.0;
  double r = 0.0;
};

struct QuadControls {
  double rel_tol = 1e-8;
  double abs_tol = 0.0;
  double tail_tol = 1e-12;  // relative size of the discarded k tail
  double k_max = 0.0;       // 0 selects the cutoff automatically
  int max_panels = 2000000;
};

/// Throws ValidationError.
void validate(const FieldParams& p);
void validate(const QuadControls& q);

/// j0(x) = sin(x)/x with a series near zero.
double spherical_j0(double x);

/// k^2 / (4 pi^2 omega(k)), omega = sqrt(k^2 + m^2).
double spectral_weight(double k, const FieldParams& p);

/// 1/(4 pi^2) * 1/(r^2 - (dt - i eps)^2).
std::complex<double> wightman_massless_closed(SpacetimeInterval s, double eps_reg);

struct KernelResult {
  std::complex<double> value;
  double error = 0.0;
  double k_upper = 0.0;     // extent of the real-axis part
  double tail_bound = 0.0;  // bound on the discarded remainder
  long evaluations = 0;
};

/// int_0^inf dk k^2/(4 pi^2 omega) j0(k r) exp(-i omega dt) exp(-omega eps).
/// With automatic k_max the part beyond a few oscillations is taken along
/// rotated rays in the complex k plane; an explicit k_max, or a point within
/// 10 eps of the light cone, truncates the real axis instead. Throws NumericalError when the requested tolerance is not reached.
KernelResult wightman_spectral_detailed(SpacetimeInterval s, const FieldParams& p,
                                        const QuadControls& q = {});
std::complex<double> wightman_spectral(SpacetimeInterval s, const FieldParams& p,
                                       const QuadControls& q = {});

}  // namespace wdistill
