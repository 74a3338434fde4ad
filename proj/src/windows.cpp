#include "wdistill/windows.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include "wdistill/errors.hpp"
#include "wdistill/simd/kernels.hpp"

namespace wdistill {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxOrder = 400;

std::complex<double> ipow(std::complex<double> z, int n) {
  std::complex<double> r = 1.0;
  while (n > 0) {
    if (n & 1) r *= z;
    z *= z;
    n >>= 1;
  }
  return r;
}

double bump(double t, double T) {
  const double c = std::cos(kPi * t / T);
  return c * c;
}

// Shifted Gaussian (g(t) - g(T/2)) / (1 - g(T/2)), written with expm1 so that
// wide Gaussians keep full precision.
double shifted_gaussian(double t, double b, double sigma) {
  const double s2 = 2.0 * sigma * sigma;
  const double edge = std::exp(-b * b / s2);
  return edge * std::expm1((b * b - t * t) / s2) / -std::expm1(-b * b / s2);
}

double gaussian_derivative(double t, double b, double sigma, int m) {
  const double s2 = 2.0 * sigma * sigma;
  const double x = t / (sigma * std::numbers::sqrt2);
  // Physicists' Hermite polynomial H_m(x).
  double h0 = 1.0, h1 = 2.0 * x;
  double hm = (m == 0) ? h0 : h1;
  for (int k = 1; k < m; ++k) {
    const double h2 = 2.0 * x * h1 - 2.0 * k * h0;
    h0 = h1;
    h1 = h2;
    hm = h2;
  }
  const double scale = std::pow(-1.0 / (sigma * std::numbers::sqrt2), m);
  return scale * hm * std::exp(-t * t / s2) / -std::expm1(-b * b / s2);
}

// eps(t) = Re sum_k c_k e^{i lambda_k t} (1/2 + e^{i kappa t}/4 + e^{-i kappa t}/4)
// on the support, with (cos x + i a sin x)^n expanded binomially.
double superoscillatory_derivative(const WindowSpec& w, double t, int m) {
  const int n = w.order;
  const double a = w.stretch;
  const double p = 0.5 * (1.0 + a), q = 0.5 * (1.0 - a);
  const double kappa = 2.0 * kPi / w.duration;
  std::complex<double> sum = 0.0;
  double binom = 1.0;
  for (int k = 0; k <= n; ++k) {
    if (k > 0) binom = binom * (n - k + 1) / k;
    const double ck = binom * std::pow(p, k) * std::pow(q, n - k);
    if (ck == 0.0) continue;
    const double lambda = (2.0 * k - n) * w.base_frequency / n;
    const double mu[3] = {lambda, lambda + kappa, lambda - kappa};
    const double wt[3] = {0.5, 0.25, 0.25};
    for (int s = 0; s < 3; ++s) {
      const std::complex<double> im_mu(0.0, mu[s]);
      sum += ck * wt[s] * ipow(im_mu, m) * std::exp(std::complex<double>(0.0, mu[s] * t));
    }
  }
  return w.amplitude * sum.real();
}

}  // namespace

std::string_view family_name(WindowFamily f) {
  switch (f) {
    case WindowFamily::gaussian: return "gaussian";
    case WindowFamily::cosine_bump: return "cosine_bump";
    case WindowFamily::superoscillatory: return "superoscillatory";
  }
  return "unknown";
}

WindowFamily parse_family(std::string_view name) {
  if (name == "gaussian") return WindowFamily::gaussian;
  if (name == "cosine_bump") return WindowFamily::cosine_bump;
  if (name == "superoscillatory") return WindowFamily::superoscillatory;
  throw ValidationError("unknown window family '" + std::string(name) + "'");
}

WindowSpec WindowSpec::gaussian(double amplitude, double duration, double sigma) {
  WindowSpec w;
  w.family = WindowFamily::gaussian;
  w.amplitude = amplitude;
  w.duration = duration;
  w.sigma = sigma;
  return w;
}

WindowSpec WindowSpec::cosine_bump(double amplitude, double duration) {
  WindowSpec w;
  w.family = WindowFamily::cosine_bump;
  w.amplitude = amplitude;
  w.duration = duration;
  return w;
}

WindowSpec WindowSpec::superoscillatory(double amplitude, double duration, double base_frequency,
                                        double stretch, int order) {
  WindowSpec w;
  w.family = WindowFamily::superoscillatory;
  w.amplitude = amplitude;
  w.duration = duration;
  w.base_frequency = base_frequency;
  w.stretch = stretch;
  w.order = order;
  return w;
}

WindowValidation validate_window(const WindowSpec& w) {
  WindowValidation out;
  auto bad = [&](const std::string& s) { out.violations.push_back(s); };
  if (!(std::isfinite(w.duration) && w.duration > 0.0)) bad("duration must be finite and > 0");
  if (!std::isfinite(w.amplitude)) bad("amplitude must be finite");
  switch (w.family) {
    case WindowFamily::gaussian:
      if (!(std::isfinite(w.sigma) && w.sigma > 0.0)) bad("gaussian sigma must be finite and > 0");
      break;
    case WindowFamily::cosine_bump:
      break;
    case WindowFamily::superoscillatory:
      if (!(std::isfinite(w.base_frequency) && w.base_frequency > 0.0))
        bad("superoscillatory base_frequency must be finite and > 0");
      if (!(std::isfinite(w.stretch) && w.stretch >= 1.0))
        bad("superoscillatory stretch must be >= 1");
      if (w.order < 1 || w.order > kMaxOrder)
        bad("superoscillatory order must be in [1, " + std::to_string(kMaxOrder) + "]");
      break;
  }
  out.accepted = out.violations.empty();
  if (!out.accepted) return out;

  // Sample audit: symmetry on the support and exact zeros outside it.
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> u(-0.75 * w.duration, 0.75 * w.duration);
  out.symmetric = true;
  out.supported = true;
  out.samples = 257;
  for (int k = 0; k < out.samples; ++k) {
    const double t = u(rng);
    const double v = evaluate_window(w, t);
    if (v != evaluate_window(w, -t) || !std::isfinite(v)) out.symmetric = false;
    if (std::abs(t) > w.half_width() && v != 0.0) out.supported = false;
  }
  if (!out.symmetric) bad("window fails the symmetry audit");
  if (!out.supported) bad("window fails the support audit");
  out.accepted = out.violations.empty();
  return out;
}

void require_valid(const WindowSpec& w) {
  auto v = validate_window(w);
  if (!v.accepted) throw ValidationError(v.violations);
}

double evaluate_window(const WindowSpec& w, double t) {
  const double b = w.half_width();
  t = std::abs(t);
  if (t > b) return 0.0;
  switch (w.family) {
    case WindowFamily::gaussian:
      return w.amplitude * shifted_gaussian(t, b, w.sigma);
    case WindowFamily::cosine_bump:
      return w.amplitude * bump(t, w.duration);
    case WindowFamily::superoscillatory: {
      const double x = w.base_frequency * t / w.order;
      const auto z = ipow({std::cos(x), w.stretch * std::sin(x)}, w.order);
      return w.amplitude * z.real() * bump(t, w.duration);
    }
  }
  return 0.0;
}

double window_derivative(const WindowSpec& w, double t, int m) {
  if (m < 0 || m > 12) throw DomainError("window derivative order must be in [0, 12]");
  if (m == 0) return evaluate_window(w, t);
  const double b = w.half_width();
  if (std::abs(t) > b) return 0.0;
  switch (w.family) {
    case WindowFamily::gaussian:
      return w.amplitude * gaussian_derivative(t, b, w.sigma, m);
    case WindowFamily::cosine_bump: {
      const double kappa = 2.0 * kPi / w.duration;
      return w.amplitude * 0.5 * std::pow(kappa, m) * std::cos(kappa * t + 0.5 * kPi * m);
    }
    case WindowFamily::superoscillatory:
      return superoscillatory_derivative(w, t, m);
  }
  return 0.0;
}

double window_internal_rate(const WindowSpec& w) {
  switch (w.family) {
    case WindowFamily::gaussian: return 1.0 / w.sigma;
    case WindowFamily::cosine_bump: return 2.0 * kPi / w.duration;
    case WindowFamily::superoscillatory:
      return w.stretch * w.base_frequency + 2.0 * kPi / w.duration;
  }
  return 0.0;
}

namespace {

std::vector<double> support_breaks(const WindowSpec& w, double nu) {
  const double b = w.half_width();
  const double rate = std::abs(nu) + window_internal_rate(w);
  const int n = std::clamp(static_cast<int>(std::ceil(rate * w.duration / kPi)), 2, 20000);
  return quad::uniform_breaks(-b, b, n + (n % 2));
}

}  // namespace

double window_l1_norm(const WindowSpec& w) {
  auto r = quad::integrate_breaks<double>([&](double t) { return std::abs(evaluate_window(w, t)); },
                                          support_breaks(w, 0.0), {0.0, 1e-10});
  return r.value;
}

TransformResult window_fourier_transform_detailed(const WindowSpec& w, double nu,
                                                  quad::Tolerance tol) {
  require_valid(w);
  if (tol.abs <= 0.0 && tol.rel <= 0.0) {
    tol.abs = 1e-10 * std::max(std::abs(w.amplitude) * w.duration, window_l1_norm(w));
  }
  auto f = [&](double t) {
    const double e = evaluate_window(w, t);
    return std::complex<double>(e * std::cos(nu * t), e * std::sin(nu * t));
  };
  auto r = quad::integrate_breaks<std::complex<double>>(f, support_breaks(w, nu), tol, 200000);
  TransformResult out;
  out.value = r.value.real();
  out.imag_residual = std::abs(r.value.imag());
  out.error = r.error;
  out.evaluations = r.evaluations;
  if (!r.converged) {
    throw NumericalError("window transform did not converge at nu=" + std::to_string(nu), r.error);
  }
  const double allowed = 10.0 * std::max(tol.target(std::abs(r.value)), r.error);
  if (out.imag_residual > allowed) {
    throw NumericalError("window transform imaginary residual too large at nu=" + std::to_string(nu),
                         out.imag_residual);
  }
  return out;
}

double window_fourier_transform(const WindowSpec& w, double nu) {
  return window_fourier_transform_detailed(w, nu).value;
}

WindowTransform::WindowTransform(const WindowSpec& w) : w_(w) {
  require_valid(w);
  const double b = w.half_width();
  const double rate = window_internal_rate(w);
  constexpr int kExtra = 2;  // derivatives used only for the truncation estimate
  std::vector<double> d(kAsymptoticTerms + kExtra);
  for (int m = 0; m < static_cast<int>(d.size()); ++m) d[m] = window_derivative(w, b, m);
  edge_.assign(d.begin(), d.begin() + kAsymptoticTerms);

  // Smallest frequency at which the omitted terms are 1e-11 of the kept ones.
  double nu = std::max(20.0 / b, 8.0 * rate);
  if (w.family == WindowFamily::gaussian) nu = std::max(nu, 12.0 / w.sigma);
  auto ok = [&](double x) {
    double kept = 0.0, dropped = 0.0;
    for (int m = 0; m < static_cast<int>(d.size()); ++m) {
      const double term = std::abs(d[m]) / std::pow(x, m + 1);
      if (m < kAsymptoticTerms) {
        kept = std::max(kept, term);
      } else {
        dropped = std::max(dropped, term);
      }
    }
    return dropped <= 1e-11 * kept;
  };
  for (int it = 0; it < 200 && !ok(nu); ++it) nu *= 1.25;
  nu_switch_ = nu;

  const int panels = static_cast<int>(std::ceil(b * (nu_switch_ + rate) / 4.0)) + 4;
  auto gl = quad::composite_gauss_legendre(0.0, b, panels, 16);
  t_ = std::move(gl.nodes);
  wf_.resize(t_.size());
  for (std::size_t k = 0; k < t_.size(); ++k) wf_[k] = 2.0 * gl.weights[k] * evaluate_window(w, t_[k]);
}

double WindowTransform::sampled(double nu) const { return simd::cosine_sum(t_, wf_, std::abs(nu)); }

double WindowTransform::asymptotic(double nu) const {
  nu = std::abs(nu);
  const double b = w_.half_width();
  const double s = std::sin(nu * b), c = std::cos(nu * b);
  const double trig[4] = {s, c, -s, -c};
  double sum = 0.0;
  double inv = 1.0 / nu;
  double p = inv;
  for (int m = 0; m < kAsymptoticTerms; ++m) {
    sum += edge_[m] * trig[m % 4] * p;
    p *= inv;
  }
  return 2.0 * sum;
}

double WindowTransform::operator()(double nu) const {
  return std::abs(nu) <= nu_switch_ ? sampled(nu) : asymptotic(nu);
}

SuperoscillationReport superoscillation_report(const WindowSpec& w, double band, int grid_points) {
  if (w.family != WindowFamily::superoscillatory) {
    throw DomainError("superoscillation_report requires a superoscillatory window, got " +
                      std::string(family_name(w.family)));
  }
  require_valid(w);
  if (!(band > 0.0)) throw ValidationError("band must be > 0");
  if (grid_points < 3) throw ValidationError("grid_points must be >= 3");
  const double b = w.half_width();
  const double h = 2.0 * b / (grid_points - 1);
  std::vector<double> roots;
  double t0 = -b, v0 = evaluate_window(w, t0);
  for (int k = 1; k < grid_points; ++k) {
    const double t1 = -b + k * h;
    const double v1 = evaluate_window(w, t1);
    if ((v0 < 0.0 && v1 > 0.0) || (v0 > 0.0 && v1 < 0.0)) {
      roots.push_back(t0 + h * v0 / (v0 - v1));
    }
    t0 = t1;
    v0 = v1;
  }
  SuperoscillationReport out;
  out.band = band;
  out.grid_points = grid_points;
  out.crossings = static_cast<int>(roots.size());
  double spacing = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < roots.size(); ++k) spacing = std::min(spacing, roots[k] - roots[k - 1]);
  out.max_local_rate = std::isfinite(spacing) ? kPi / spacing : 0.0;
  out.ratio = out.max_local_rate / band;
  return out;
}

}  // namespace wdistill
