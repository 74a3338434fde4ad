#pragma once

// Compactly supported, even coupling windows eps(t) on [-T/2, T/2] and their
// Fourier transforms eps~(nu) = int dt eps(t) e^{i nu t}.

#include <string>
#include <string_view>
#include <vector>

#include "wdistill/quadrature.hpp"

namespace wdistill {

enum class WindowFamily { gaussian, cosine_bump, superoscillatory };

std::string_view family_name(WindowFamily f);
/// Throws ValidationError for unknown names.
WindowFamily parse_family(std::string_view name);

struct WindowSpec {
  WindowFamily family = WindowFamily::cosine_bump;
  double amplitude = 1.0;  // eps0
  double duration = 1.0;   // T, support is [-T/2, T/2]
  // gaussian
  double sigma = 0.0;
  // superoscillatory: Re[(cos(w0 t/n) + i a sin(w0 t/n))^n] times the cosine bump
  double base_frequency = 0.0;
  double stretch = 1.0;
  int order = 1;

  static WindowSpec gaussian(double amplitude, double duration, double sigma);
  static WindowSpec cosine_bump(double amplitude, double duration);
  static WindowSpec superoscillatory(double amplitude, double duration, double base_frequency,
                                     double stretch, int order);

  double half_width() const { return 0.5 * duration; }
  WindowSpec scaled(double c) const {
    WindowSpec w = *this;
    w.amplitude *= c;
    return w;
  }
};

struct WindowValidation {
  bool accepted = false;
  std::vector<std::string> violations;
  // Sample-grid audits, only meaningful when the parameters were accepted.
  bool symmetric = false;
  bool supported = false;
  int samples = 0;
};

WindowValidation validate_window(const WindowSpec& w);
/// Throws ValidationError listing every violated constraint.
void require_valid(const WindowSpec& w);

/// eps(t); exactly zero for |t| > T/2 and exactly even in t.
double evaluate_window(const WindowSpec& w, double t);

/// d^m eps / dt^m for |t| <= T/2 (one-sided limit at the support edge), m <= 12.
double window_derivative(const WindowSpec& w, double t, int m);

/// Fastest local oscillation rate of the window shape, used to size grids.
double window_internal_rate(const WindowSpec& w);

/// int |eps(t)| dt.
double window_l1_norm(const WindowSpec& w);

struct TransformResult {
  double value = 0.0;
  double error = 0.0;
  double imag_residual = 0.0;
  long evaluations = 0;
};

/// Adaptive-quadrature reference transform. The default absolute tolerance is
/// 1e-10 * max(|eps0| T, int|eps|). Throws NumericalError if the tolerance is
/// not met or the imaginary residual exceeds it.
TransformResult window_fourier_transform_detailed(const WindowSpec& w, double nu,
                                                  quad::Tolerance tol = {0.0, 0.0});
double window_fourier_transform(const WindowSpec& w, double nu);

/// Fast transform for repeated evaluation inside amplitude integrals.
/// Below a switch frequency it sums a composite Gauss-Legendre rule with the
/// SIMD cosine kernel; above it uses the endpoint asymptotic expansion
///   eps~(nu) = 2 sum_m eps^(m)(T/2) trig_m(nu T/2) / nu^(m+1),
/// which is exact up to the truncation estimate because every family is
/// smooth inside its support.
class WindowTransform {
 public:
  explicit WindowTransform(const WindowSpec& w);

  double operator()(double nu) const;
  double sampled(double nu) const;
  double asymptotic(double nu) const;

  double switch_frequency() const { return nu_switch_; }
  std::size_t nodes() const { return t_.size(); }
  const WindowSpec& spec() const { return w_; }

 private:
  WindowSpec w_;
  double nu_switch_ = 0.0;
  std::vector<double> t_;
  std::vector<double> wf_;      // 2 * weight * eps(t)
  std::vector<double> edge_;    // eps^(m)(T/2), m = 0..kAsymptoticTerms-1
  static constexpr int kAsymptoticTerms = 10;
};

struct SuperoscillationReport {
  double max_local_rate = 0.0;  // pi / (smallest spacing of consecutive zero crossings)
  double band = 0.0;
  double ratio = 0.0;           // max_local_rate / band; > 1 certifies superoscillation
  int crossings = 0;
  int grid_points = 0;
};

/// Zero crossings of the window are located on a uniform grid of
/// `grid_points` samples over the support by sign change plus linear
/// interpolation. Throws DomainError for non-superoscillatory families.
SuperoscillationReport superoscillation_report(const WindowSpec& w, double band,
                                               int grid_points = 1 << 16);

}  // namespace wdistill
