#pragma once

// Adaptive Gauss-Kronrod integration (7/15-point pair, global bisection on the
// interval with the largest error) plus a panel-marching driver for
// semi-infinite ranges and fixed Gauss-Legendre rules.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <queue>
#include <vector>

namespace wdistill::quad {

struct Tolerance {
  double abs = 0.0;
  double rel = 1e-10;
  // Accept errors below roundoff * integral of |f| (cancelling integrands).
  double roundoff = 0.0;

  double target(double magnitude) const { return std::max(abs, rel * magnitude); }
};

template <class T>
struct Result {
  T value{};
  double error = 0.0;
  double abs_value = 0.0;  // integral of |f|
  long evaluations = 0;
  bool converged = false;
};

namespace detail {

inline double magnitude(double x) { return std::abs(x); }
inline double magnitude(const std::complex<double>& z) { return std::abs(z); }

// QUADPACK qk15 abscissae (positive half) and weights.
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class T>
struct Panel {
  double a, b;
  T value;
  double error;
  double abs_value;  // integral of |f|, used for scale-aware tolerances
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class T, class F>
Panel<T> kronrod15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const T fc = f(c);
  T resk = fc * kWgk[7];
  T resg = fc * kWg[3];
  double resabs = magnitude(fc) * kWgk[7];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const T f1 = f(c - dx);
    const T f2 = f(c + dx);
    resk += (f1 + f2) * kWgk[j];
    resabs += (magnitude(f1) + magnitude(f2)) * kWgk[j];
    if (j % 2 == 1) resg += (f1 + f2) * kWg[j / 2];
  }
  Panel<T> p{a, b, resk * h, 0.0, resabs * std::abs(h)};
  p.error = magnitude((resk - resg) * h);
  // Roundoff floor so that flat integrands do not split forever.
  p.error = std::max(p.error, 50.0 * std::numeric_limits<double>::epsilon() * p.abs_value);
  return p;
}

}  // namespace detail

/// Globally adaptive integration over the union of [breaks[k], breaks[k+1]].
/// Seeding with breakpoints keeps oscillatory integrands from converging
/// spuriously on a coarse first panel. The tolerance is measured against
/// max(|integral|, scale_floor).
template <class T, class F>
Result<T> integrate_breaks(F&& f, const std::vector<double>& breaks, Tolerance tol,
                           int max_panels = 4000, double scale_floor = 0.0) {
  Result<T> out;
  std::priority_queue<detail::Panel<T>> heap;
  long evals = 0;
  T total{};
  double err = 0.0, mass = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    if (breaks[k] == breaks[k + 1]) continue;
    auto p = detail::kronrod15<T>(f, breaks[k], breaks[k + 1]);
    evals += 15;
    total += p.value;
    err += p.error;
    mass += p.abs_value;
    heap.push(p);
  }
  auto target = [&](double value, double abs_mass) {
    return std::max(tol.target(std::max(value, scale_floor)), tol.roundoff * abs_mass);
  };
  if (heap.empty()) {
    out.converged = true;
    return out;
  }
  max_panels = std::max(max_panels, static_cast<int>(heap.size()) + 2);
  while (true) {
    if (err <= target(detail::magnitude(total), mass)) {
      out.converged = true;
      break;
    }
    if (static_cast<int>(heap.size()) >= max_panels) break;
    auto worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;  // interval exhausted
    heap.pop();
    auto left = detail::kronrod15<T>(f, worst.a, mid);
    auto right = detail::kronrod15<T>(f, mid, worst.b);
    evals += 30;
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    mass += left.abs_value + right.abs_value - worst.abs_value;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to shed the running-update drift.
  T sum{};
  double esum = 0.0, msum = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    esum += heap.top().error;
    msum += heap.top().abs_value;
    heap.pop();
  }
  out.value = sum;
  out.error = esum;
  out.abs_value = msum;
  out.evaluations = evals;
  if (!out.converged) out.converged = esum <= target(detail::magnitude(sum), msum);
  return out;
}

/// Globally adaptive integration of f over [a, b]. T is double or complex<double>.
template <class T, class F>
Result<T> integrate(F&& f, double a, double b, Tolerance tol, int max_panels = 4000,
                    double scale_floor = 0.0) {
  return integrate_breaks<T>(f, std::vector<double>{a, b}, tol, max_panels, scale_floor);
}

/// n+1 equally spaced breakpoints on [a, b].
inline std::vector<double> uniform_breaks(double a, double b, int n) {
  std::vector<double> out(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) out[k] = a + (b - a) * k / n;
  out.back() = b;
  return out;
}

struct TailControls {
  double first_width = 1.0;  // width of the first panel
  double growth = 1.25;      // panel width multiplier
  double max_width = 0.0;    // 0 = unbounded
  double upper_cap = std::numeric_limits<double>::infinity();
  int max_panels = 400;
  int quiet_panels = 3;      // consecutive negligible panels needed to stop
};

template <class T>
struct TailResult : Result<T> {
  double upper = 0.0;       // where integration stopped
  double tail_bound = 0.0;  // estimate of the discarded remainder
};

/// Integrates f over [a, inf) by marching panels until consecutive panels
/// contribute negligibly. Panel contributions that decay geometrically are
/// summed analytically as a tail correction and bounded in `tail_bound`.
template <class T, class F>
TailResult<T> integrate_to_infinity(F&& f, double a, Tolerance tol, TailControls ctl,
                                    int max_panels_each = 2000) {
  TailResult<T> out;
  T sum{};
  double err = 0.0;
  double width = ctl.first_width;
  double lo = a;
  int quiet = 0;
  double scale = 0.0;  // running integral of |f|
  std::vector<double> mags;
  for (int panel = 0; panel < ctl.max_panels; ++panel) {
    double hi = std::min(lo + width, ctl.upper_cap);
    Tolerance inner = tol;
    inner.abs = std::max(tol.abs, 0.05 * tol.rel * std::max(detail::magnitude(sum), 1e-300));
    auto r = integrate<T>(f, lo, hi, inner, max_panels_each);
    sum += r.value;
    err += r.error;
    out.evaluations += r.evaluations;
    mags.push_back(detail::magnitude(r.value) + r.error);
    scale = std::max(scale, detail::magnitude(sum));
    const double negligible = 0.02 * tol.target(scale);
    quiet = (mags.back() <= negligible) ? quiet + 1 : 0;
    lo = hi;
    if (quiet >= ctl.quiet_panels || lo >= ctl.upper_cap) break;
    width *= ctl.growth;
    if (ctl.max_width > 0.0) width = std::min(width, ctl.max_width);
  }
  // Remainder estimate: if the last panel magnitudes shrink by a roughly
  // constant ratio q < 1, the tail is bounded by m_last * q / (1 - q).
  double tail = 0.0;
  if (mags.size() >= 3) {
    const double m2 = mags[mags.size() - 1];
    const double m1 = mags[mags.size() - 2];
    const double q = (m1 > 0.0) ? std::min(m2 / m1, 0.999) : 0.0;
    tail = (q > 0.0) ? m2 * q / (1.0 - q) : m2;
  } else if (!mags.empty()) {
    tail = mags.back();
  }
  out.value = sum;
  out.upper = lo;
  out.tail_bound = tail;
  out.error = err + tail;
  out.converged = out.error <= tol.target(detail::magnitude(sum));
  return out;
}

/// n-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussLegendre gauss_legendre(int n) {
  GaussLegendre r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double pi = std::acos(-1.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = r.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

/// Composite Gauss-Legendre nodes/weights: `panels` equal panels of an
/// `order`-point rule on [a, b].
inline GaussLegendre composite_gauss_legendre(double a, double b, int panels, int order) {
  const auto base = gauss_legendre(order);
  GaussLegendre r;
  r.nodes.reserve(static_cast<std::size_t>(panels) * order);
  r.weights.reserve(static_cast<std::size_t>(panels) * order);
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double c = a + (p + 0.5) * h;
    for (int j = 0; j < order; ++j) {
      r.nodes.push_back(c + 0.5 * h * base.nodes[j]);
      r.weights.push_back(0.5 * h * base.weights[j]);
    }
  }
  return r;
}

}  // namespace wdistill::quad
