#include "wdistill/amplitudes.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "wdistill/errors.hpp"
#include "wdistill/quadrature.hpp"
#include "wdistill/simd/kernels.hpp"

namespace wdistill {

namespace {

constexpr double kPi = std::numbers::pi;
// Cancelling k-integrals (e.g. far separations) are accurate to this
// fraction of the integral of the absolute integrand.
constexpr double kRoundoff = 1e-13;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int clamp_panels(double x, int hi) {
  if (!(x > 1.0)) return 1;
  return static_cast<int>(std::min(std::ceil(x), static_cast<double>(hi)));
}

}  // namespace

Sign parse_sign(char c) {
  if (c == '+') return Sign::plus;
  if (c == '-') return Sign::minus;
  throw ValidationError(std::string("sign must be '+' or '-', got '") + c + "'");
}

double separation(const DetectorSpec& a, const DetectorSpec& b) {
  const double dx = a.position[0] - b.position[0];
  const double dy = a.position[1] - b.position[1];
  const double dz = a.position[2] - b.position[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void validate_detectors(const std::vector<DetectorSpec>& detectors) {
  std::vector<std::string> bad;
  std::set<std::string> seen;
  for (const auto& d : detectors) {
    const std::string who = "detector '" + d.label + "': ";
    if (d.label.empty()) bad.push_back("detector label must be nonempty");
    if (!seen.insert(d.label).second) bad.push_back(who + "duplicate label");
    if (!(std::isfinite(d.gap) && d.gap > 0.0)) bad.push_back(who + "gap must be finite and > 0");
    for (double x : d.position) {
      if (!std::isfinite(x)) bad.push_back(who + "position must be finite");
    }
    for (const auto& v : validate_window(d.window).violations) bad.push_back(who + v);
  }
  if (!bad.empty()) throw ValidationError(bad);
}

AmplitudeResult exchange_amplitude_prepared(const WindowTransform& fi, double gap_i, Sign a,
                                            const WindowTransform& fj, double gap_j, Sign b,
                                            double distance, const FieldParams& p,
                                            const QuadControls& q) {
  const double ci = sign_value(a) * gap_i;
  const double cj = sign_value(b) * gap_j;
  auto f = [&](double k) {
    const double omega = std::hypot(k, p.mass);
    return spectral_weight(k, p) * spherical_j0(k * distance) * fi(ci - omega) * fj(cj + omega);
  };
  // Phase rate of the integrand in k: the separation plus both half-widths.
  const double rate = distance + fi.spec().half_width() + fj.spec().half_width();
  const double width = 2.0 * kPi / rate;
  // Beyond k0 both transforms use their asymptotic branch and are cheap.
  const double k0 = std::max(fi.switch_frequency() + gap_i, fj.switch_frequency() + gap_j);

  AmplitudeResult out;
  auto head = quad::integrate_breaks<double>(
      f, quad::uniform_breaks(0.0, k0, clamp_panels(k0 / width, 2000000)),
      {q.abs_tol, 0.5 * q.rel_tol, 0.5 * kRoundoff}, q.max_panels);
  double sum = head.value;
  double err = head.error;
  double mass = head.abs_value;
  auto target = [&] { return std::max({q.abs_tol, q.rel_tol * std::abs(sum), kRoundoff * mass}); };
  out.evaluations = head.evaluations;
  bool ok = head.converged;

  // Tail in doubling chunks. Once successive chunks shrink geometrically the
  // remainder is summed as a geometric series and its spread is charged to
  // the error estimate.
  double lo = k0, hi = 2.0 * k0;
  double prev = 0.0, prev_q = -1.0;
  bool settled = false;
  for (int chunk = 0; chunk < 28 && !settled; ++chunk) {
    const double tgt = target();
    auto r = quad::integrate_breaks<double>(
        f, quad::uniform_breaks(lo, hi, clamp_panels((hi - lo) / width, 400000)),
        {0.05 * tgt, 0.0}, q.max_panels);
    sum += r.value;
    err += r.error;
    mass += r.abs_value;
    out.evaluations += r.evaluations;
    const double cur = r.value;
      if (chunk > 0) {
      if (cur == 0.0 && prev == 0.0) {
        settled = true;
      } else if (prev != 0.0) {
        const double ratio = cur / prev;
        if (ratio > 0.0 && ratio < 0.9 && prev_q > 0.0) {
          const double tail = cur * ratio / (1.0 - ratio);
          const double spread = std::abs(tail) * (std::abs(ratio - prev_q) / ratio + 1e-3);
          if (spread <= 0.2 * tgt) {
            sum += tail;
            err += spread;
            settled = true;
          }
        } else if (std::abs(cur) + std::abs(prev) <= 0.02 * tgt) {
          err += std::abs(cur) + std::abs(prev);
          settled = true;
        }
        prev_q = ratio;
      }
    }
    prev = cur;
    lo = hi;
    hi *= 2.0;
  }
  out.value = sum;
  out.error = err;
  if (!ok || !settled || err > target()) {
    throw NumericalError("amplitude k-integral did not reach tolerance", err);
  }
  return out;
}

AmplitudeResult exchange_amplitude_detailed(const DetectorSpec& i, Sign a, const DetectorSpec& j,
                                            Sign b, const FieldParams& p, const QuadControls& q) {
  validate(p);
  validate(q);
  validate_detectors(i.label == j.label ? std::vector<DetectorSpec>{i} : std::vector<DetectorSpec>{i, j});
  const WindowTransform fi(i.window);
  const WindowTransform fj(j.window);
  return exchange_amplitude_prepared(fi, i.gap, a, fj, j.gap, b, separation(i, j), p, q);
}

double exchange_amplitude(const DetectorSpec& i, Sign a, const DetectorSpec& j, Sign b,
                          const FieldParams& p, const QuadControls& q) {
  return exchange_amplitude_detailed(i, a, j, b, p, q).value;
}

namespace {

// Neville extrapolation of (x_k, y_k) to x = 0.
std::complex<double> extrapolate_to_zero(const std::vector<double>& x,
                                         std::vector<std::complex<double>> y,
                                         std::complex<double>* previous) {
  const std::size_t n = x.size();
  std::complex<double> last_diag = y[0];
  for (std::size_t m = 1; m < n; ++m) {
    for (std::size_t k = n - 1; k >= m; --k) {
      y[k] = (x[k - m] * y[k] - x[k] * y[k - 1]) / (x[k - m] - x[k]);
      if (k == m) break;
    }
    if (m + 1 == n) *previous = last_diag;
    last_diag = y[m];
  }
  if (n == 1) *previous = y[0];
  return y[n - 1];
}

}  // namespace

AmplitudeResult amplitude_time_domain_oracle(const DetectorSpec& i, Sign a, const DetectorSpec& j,
                                             Sign b, std::vector<double> eps_sequence,
                                             double rel_tol) {
  validate_detectors(i.label == j.label ? std::vector<DetectorSpec>{i} : std::vector<DetectorSpec>{i, j});
  const double L = separation(i, j);
  if (!(L > 0.0)) {
    throw DomainError("time-domain oracle needs distinct positions; coincident amplitudes use the spectral path");
  }
  const double bi = i.window.half_width(), bj = j.window.half_width();
  const double gap_to_cone = L - (bi + bj);
  const double freq = std::max({i.gap + window_internal_rate(i.window), j.gap + window_internal_rate(j.window)});
  if (eps_sequence.empty()) {
    // The eps dependence is exp(-omega eps) over the window band, so the
    // sequence starts below both the light-cone gap and 1/frequency.
    double e0 = gap_to_cone > 0.0 ? 0.1 * gap_to_cone : 0.05 * (bi + bj);
    e0 = std::min(e0, 1.0 / freq);
    for (int k = 0; k < 6; ++k) eps_sequence.push_back(e0 / std::pow(2.0, k));
  }
  for (double e : eps_sequence) {
    if (!(e > 0.0)) throw ValidationError("eps sequence entries must be > 0");
  }

  const double horizon = 2.0 * std::max(bi, bj);
  int n = 48 + static_cast<int>(2.0 * freq * horizon);
  n += gap_to_cone > 0.0 ? static_cast<int>(6.0 * (bi + bj) / gap_to_cone) : 400;

  auto evaluate = [&](int nodes, double eps) {
    const auto gl = quad::gauss_legendre(nodes);
    std::vector<double> s(nodes), cre(nodes), cim(nodes);
    for (int k = 0; k < nodes; ++k) {
      const double t = bj * gl.nodes[k];
      const double amp = bj * gl.weights[k] * evaluate_window(j.window, t);
      s[k] = t;
      cre[k] = amp * std::cos(sign_value(b) * j.gap * t);
      cim[k] = amp * std::sin(sign_value(b) * j.gap * t);
    }
    std::complex<double> total = 0.0;
    for (int k = 0; k < nodes; ++k) {
      const double t = bi * gl.nodes[k];
      const double amp = bi * gl.weights[k] * evaluate_window(i.window, t);
      if (amp == 0.0) continue;
      const std::complex<double> phase(std::cos(sign_value(a) * i.gap * t), std::sin(sign_value(a) * i.gap * t));
      total += amp * phase * simd::cauchy_sum(s, cre, cim, t, L * L, eps);
    }
    return total / (4.0 * kPi * kPi);
  };

  auto extrapolated = [&](int nodes, std::complex<double>* prev) {
    std::vector<std::complex<double>> ys;
    for (double e : eps_sequence) ys.push_back(evaluate(nodes, e));
    return extrapolate_to_zero(eps_sequence, ys, prev);
  };

  AmplitudeResult out;
  std::complex<double> prev_order;
  std::complex<double> value = extrapolated(n, &prev_order);
  for (int round = 0; round < 5; ++round) {
    std::complex<double> po;
    const auto finer = extrapolated(2 * n, &po);
    const double scale = std::max(std::abs(finer), 1e-300);
    const double dn = std::abs(finer - value);
    const double de = std::abs(finer - po);
    value = finer;
    prev_order = po;
    n *= 2;
    if (dn <= rel_tol * scale && de <= rel_tol * scale) break;
    if (n > 8192) break;
  }
  out.value = value.real();
  out.imag_residual = std::abs(value.imag());
  out.error = std::abs(value - prev_order);
  out.evaluations = static_cast<long>(n) * n * static_cast<long>(eps_sequence.size());
  if (out.error > rel_tol * std::max(std::abs(value), 1e-300)) {
    throw NumericalError("time-domain oracle extrapolation did not settle", out.error);
  }
  return out;
}

double self_energy_real(const DetectorSpec& i, const FieldParams& p, const QuadControls& q) {
  return exchange_amplitude(i, Sign::minus, i, Sign::plus, p, q);
}

AmplitudeResult self_energy_time_ordered_oracle(const DetectorSpec& i, double rel_tol) {
  validate_detectors({i});
  const auto& w = i.window;
  const double b = w.half_width();
  const double omega = i.gap;
  const int nodes = 64 + static_cast<int>(4.0 * window_internal_rate(w) * w.duration);
  const auto gl = quad::gauss_legendre(nodes);
  // A(u) and A'(u) on the overlap [-b, b - u] of the shifted supports.
  auto overlap = [&](double u, int derivative) {
    const double lo = -b, hi = b - u;
    const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
    double acc = 0.0;
    for (int k = 0; k < nodes; ++k) {
      const double t = c + h * gl.nodes[k];
      acc += gl.weights[k] * window_derivative(w, t + u, derivative) * evaluate_window(w, t);
    }
    return h * acc;
  };
  const double a0 = overlap(0.0, 0);
  auto integrand = [&](double u) {
    return (overlap(u, 1) * std::cos(omega * u) - omega * overlap(u, 0) * std::sin(omega * u)) / u;
  };
  const double width = std::min(2.0 * kPi / (omega + window_internal_rate(w)), w.duration / 8.0);
  auto r = quad::integrate_breaks<double>(
      integrand, quad::uniform_breaks(0.0, w.duration, clamp_panels(w.duration / width, 100000)),
      {0.0, 1e-3 * rel_tol}, 200000, 0.5 * kPi * omega * std::abs(a0));
  AmplitudeResult out;
  out.value = -(0.5 * kPi * omega * a0 + r.value) / (2.0 * kPi * kPi);
  out.error = r.error / (2.0 * kPi * kPi);
  out.evaluations = r.evaluations * nodes;
  if (!r.converged || out.error > rel_tol * std::abs(out.value)) {
    throw NumericalError("time-ordered self-energy oracle did not converge", out.error);
  }
  return out;
}

// ---------------------------------------------------------------------------

AmplitudeTable::AmplitudeTable(std::vector<std::string> labels) : labels_(std::move(labels)) {
  const std::size_t n = 2 * labels_.size();
  values_.assign(n * n, kNaN);
  errors_.assign(n * n, kNaN);
  self_energy.assign(labels_.size(), kNaN);
}

std::size_t AmplitudeTable::index_of(std::string_view label) const {
  for (std::size_t k = 0; k < labels_.size(); ++k) {
    if (labels_[k] == label) return k;
  }
  throw LookupError("no detector labelled '" + std::string(label) + "' in amplitude table");
}

std::size_t AmplitudeTable::slot(std::size_t i, Sign a, std::size_t j, Sign b) const {
  const std::size_t n = labels_.size();
  if (i >= n || j >= n) throw LookupError("amplitude index out of range");
  const std::size_t r = 2 * i + (a == Sign::plus ? 1 : 0);
  const std::size_t c = 2 * j + (b == Sign::plus ? 1 : 0);
  return r * 2 * n + c;
}

bool AmplitudeTable::has(std::size_t i, Sign a, std::size_t j, Sign b) const {
  return !std::isnan(values_[slot(i, a, j, b)]);
}

double AmplitudeTable::value(std::size_t i, Sign a, std::size_t j, Sign b) const {
  const double v = values_[slot(i, a, j, b)];
  if (std::isnan(v)) throw LookupError("amplitude table has no entry " + index_name(i, a, j, b));
  return v;
}

double AmplitudeTable::error(std::size_t i, Sign a, std::size_t j, Sign b) const {
  value(i, a, j, b);
  return errors_[slot(i, a, j, b)];
}

void AmplitudeTable::set(std::size_t i, Sign a, std::size_t j, Sign b, double value, double error) {
  values_[slot(i, a, j, b)] = value;
  errors_[slot(i, a, j, b)] = error;
}

std::string AmplitudeTable::index_name(std::size_t i, Sign a, std::size_t j, Sign b) const {
  return std::string("d[") + labels_.at(i) + sign_char(a) + "," + labels_.at(j) + sign_char(b) + "]";
}

namespace {

std::string fmt17(double x) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ValidationError("malformed number '" + s + "'");
  return v;
}

}  // namespace

std::string AmplitudeTable::to_text() const {
  std::ostringstream os;
  os << "# amplitude table\n# labels";
  for (const auto& l : labels_) os << ' ' << l;
  os << "\n# synthetic " << (synthetic ? 1 : 0) << "\n# causality_waived " << (causality_waived ? 1 : 0)
     << "\n";
  for (std::size_t k = 0; k < labels_.size(); ++k) {
    if (!std::isnan(self_energy[k])) os << "# self_energy " << labels_[k] << ' ' << fmt17(self_energy[k]) << "\n";
  }
  os << "# i a j b value error\n";
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    for (Sign a : {Sign::minus, Sign::plus}) {
      for (std::size_t j = 0; j < labels_.size(); ++j) {
        for (Sign b : {Sign::minus, Sign::plus}) {
          if (!has(i, a, j, b)) continue;
          os << labels_[i] << ' ' << sign_char(a) << ' ' << labels_[j] << ' ' << sign_char(b) << ' '
             << fmt17(value(i, a, j, b)) << ' ' << fmt17(error(i, a, j, b)) << "\n";
        }
      }
    }
  }
  return os.str();
}

AmplitudeTable AmplitudeTable::from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<std::string> labels;
  std::vector<std::pair<std::string, double>> self;
  bool synthetic = false, waived = false, have_labels = false;
  std::vector<std::string> body;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line[0] == '#') {
      std::string hash, key;
      ls >> hash >> key;
      if (key == "labels") {
        std::string l;
        while (ls >> l) labels.push_back(l);
        have_labels = true;
      } else if (key == "synthetic") {
        int v = 0;
        ls >> v;
        synthetic = v != 0;
      } else if (key == "causality_waived") {
        int v = 0;
        ls >> v;
        waived = v != 0;
      } else if (key == "self_energy") {
        std::string l, v;
        ls >> l >> v;
        self.emplace_back(l, parse_double(v));
      }
      continue;
    }
    body.push_back(std::to_string(lineno) + "\t" + line);
  }
  if (!have_labels || labels.empty()) throw ValidationError("amplitude table lacks a '# labels' header");
  AmplitudeTable t(labels);
  t.synthetic = synthetic;
  t.causality_waived = waived;
  for (const auto& [l, v] : self) t.self_energy[t.index_of(l)] = v;
  for (const auto& entry : body) {
    const auto tab = entry.find('\t');
    const std::string where = "amplitude table line " + entry.substr(0, tab);
    std::istringstream ls(entry.substr(tab + 1));
    std::string li, ai, lj, bj, v, e;
    if (!(ls >> li >> ai >> lj >> bj >> v)) throw ValidationError(where + ": expected 'i a j b value [error]'");
    if (!(ls >> e)) e = "0";
    if (ai.size() != 1 || bj.size() != 1) throw ValidationError(where + ": signs must be '+' or '-'");
    try {
      t.set(t.index_of(li), parse_sign(ai[0]), t.index_of(lj), parse_sign(bj[0]), parse_double(v),
            parse_double(e));
    } catch (const Error& ex) {
      throw ValidationError(where + ": " + ex.what());
    }
  }
  return t;
}

// ---------------------------------------------------------------------------

AmplitudeTable build_amplitude_table(const std::vector<DetectorSpec>& detectors, const FieldParams& p,
                                     const QuadControls& q, const TableOptions& opt) {
  validate(p);
  validate(q);
  validate_detectors(detectors);
  const std::size_t n = detectors.size();
  if (n == 0) throw ValidationError("at least one detector is required");

  RegimeFlags flags;
  flags.min_separation_ratio = std::numeric_limits<double>::infinity();
  std::vector<std::string> violations;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double L = separation(detectors[i], detectors[j]);
      const double T = std::max(detectors[i].window.duration, detectors[j].window.duration);
      flags.min_separation_ratio = std::min(flags.min_separation_ratio, L / T);
      if (!(T < L)) {
        violations.push_back("detectors " + detectors[i].label + " and " + detectors[j].label +
                             " are causally connected: L=" + std::to_string(L) + " <= cT=" + std::to_string(T));
      }
    }
  }
  flags.causally_disconnected = violations.empty();
  if (!violations.empty() && !opt.waive_causality) throw ValidationError(violations);

  std::vector<std::string> labels;
  std::vector<WindowTransform> ft;
  ft.reserve(n);
  for (const auto& d : detectors) {
    labels.push_back(d.label);
    ft.emplace_back(d.window);
    // Audit the imaginary residual of the reference transform near the gap.
    for (double nu : {0.0, d.gap, 2.0 * d.gap}) {
      flags.max_imag_residual =
          std::max(flags.max_imag_residual, window_fourier_transform_detailed(d.window, nu).imag_residual);
    }
  }
  AmplitudeTable t(labels);
  t.causality_waived = opt.waive_causality && !violations.empty();

  auto compute = [&](std::size_t i, Sign a, std::size_t j, Sign b) {
    try {
      return exchange_amplitude_prepared(ft[i], detectors[i].gap, a, ft[j], detectors[j].gap, b,
                                         separation(detectors[i], detectors[j]), p, q);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string("while computing ") + t.index_name(i, a, j, b) + ": " + e.what(),
                           e.achieved_error());
    }
  };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      // ++ for every ordered pair; -- follows from d_ij^{--} = conj d_ji^{++}.
      const auto pp = compute(i, Sign::plus, j, Sign::plus);
      t.set(i, Sign::plus, j, Sign::plus, pp.value, pp.error);
      t.set(j, Sign::minus, i, Sign::minus, pp.value, pp.error);
      // -+ and +- integrands are symmetric under i <-> j.
      if (j < i) continue;
      const auto mp = compute(i, Sign::minus, j, Sign::plus);
      t.set(i, Sign::minus, j, Sign::plus, mp.value, mp.error);
      t.set(j, Sign::minus, i, Sign::plus, mp.value, mp.error);
      const auto pm = compute(i, Sign::plus, j, Sign::minus);
      t.set(i, Sign::plus, j, Sign::minus, pm.value, pm.error);
      t.set(j, Sign::plus, i, Sign::minus, pm.value, pm.error);
    }
  }

  flags.min_emission = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double e = t.value(i, Sign::minus, i, Sign::plus);
    t.self_energy[i] = e;
    flags.min_emission = std::min(flags.min_emission, e);
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) flags.max_overlap = std::max(flags.max_overlap, std::abs(t.value(i, Sign::minus, j, Sign::plus)));
    }
  }
  flags.overlap_negligible = flags.max_overlap <= kOverlapNegligibleThreshold * flags.min_emission;
  t.flags = flags;
  return t;
}

AmplitudeTable make_synthetic_table(const SyntheticParams& s) {
  std::vector<std::string> bad;
  if (s.detectors < 2 || s.detectors > 26) bad.push_back("synthetic detector count must be in [2, 26]");
  if (s.hub >= s.detectors) bad.push_back("synthetic hub index out of range");
  if (!(std::isfinite(s.exchange) && s.exchange != 0.0)) bad.push_back("synthetic exchange must be finite and nonzero");
  if (!(s.kappa > 0.0)) bad.push_back("synthetic kappa must be > 0");
  if (!(std::isfinite(s.overlap_fraction) && s.overlap_fraction >= 0.0))
    bad.push_back("synthetic overlap_fraction must be >= 0");
  if (!bad.empty()) throw ValidationError(bad);

  std::vector<std::string> labels;
  for (std::size_t k = 0; k < s.detectors; ++k) labels.push_back(std::string(1, static_cast<char>('A' + k)));
  AmplitudeTable t(labels);
  t.synthetic = true;
  const double other = std::isinf(s.kappa) ? 0.0 : s.exchange / s.kappa;
  const double overlap = s.overlap_fraction * other;
  const std::size_t n = s.detectors;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const bool hub_pair = i != j && (i == s.hub || j == s.hub);
      const double x = hub_pair ? s.exchange : other;
      t.set(i, Sign::plus, j, Sign::plus, x);
      t.set(i, Sign::minus, j, Sign::minus, x);
      t.set(i, Sign::minus, j, Sign::plus, i == j ? other : overlap);
      t.set(i, Sign::plus, j, Sign::minus, i == j ? other : overlap);
    }
    t.self_energy[i] = other;
  }
  t.flags.causally_disconnected = true;
  t.flags.min_emission = other;
  t.flags.max_overlap = overlap;
  t.flags.overlap_negligible = overlap <= kOverlapNegligibleThreshold * other;
  return t;
}

AmplitudeTable scale_detector(const AmplitudeTable& t, std::size_t i, double s) {
  if (i >= t.size()) throw ValidationError("scaled detector index out of range");
  if (!(std::isfinite(s) && s > 0.0)) throw ValidationError("detector scale must be finite and > 0");
  AmplitudeTable out = t;
  const std::size_t n = t.size();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double f = (a == i ? s : 1.0) * (b == i ? s : 1.0);
      for (Sign sa : {Sign::minus, Sign::plus}) {
        for (Sign sb : {Sign::minus, Sign::plus}) {
          if (t.has(a, sa, b, sb)) out.set(a, sa, b, sb, f * t.value(a, sa, b, sb), f * t.error(a, sa, b, sb));
        }
      }
    }
  }
  if (i < out.self_energy.size()) out.self_energy[i] *= s * s;
  auto& flags = out.flags;
  flags.min_emission = std::numeric_limits<double>::infinity();
  flags.max_overlap = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    if (out.has(a, Sign::minus, a, Sign::plus)) {
      flags.min_emission = std::min(flags.min_emission, out.value(a, Sign::minus, a, Sign::plus));
    }
    for (std::size_t b = 0; b < n; ++b) {
      if (a != b && out.has(a, Sign::minus, b, Sign::plus)) {
        flags.max_overlap = std::max(flags.max_overlap, std::abs(out.value(a, Sign::minus, b, Sign::plus)));
      }
    }
  }
  flags.overlap_negligible = flags.max_overlap <= kOverlapNegligibleThreshold * flags.min_emission;
  return out;
}

Dominance dominance_ratio(const AmplitudeTable& t, std::size_t hub) {
  const std::size_t n = t.size();
  if (hub >= n) throw LookupError("hub index out of range");
  Dominance d;
  d.min_hub = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (i == hub) continue;
    for (auto [x, y] : {std::pair{i, hub}, std::pair{hub, i}}) {
      d.min_hub = std::min(d.min_hub, std::abs(t.value(x, Sign::plus, y, Sign::plus)));
      d.min_hub = std::min(d.min_hub, std::abs(t.value(x, Sign::minus, y, Sign::minus)));
    }
  }
  auto consider = [&](std::size_t i, Sign a, std::size_t j, Sign b) {
    const double v = std::abs(t.value(i, a, j, b));
    if (v > d.max_other || d.limiting.empty()) {
      d.max_other = std::max(d.max_other, v);
      d.limiting = t.index_name(i, a, j, b);
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      consider(i, Sign::minus, j, Sign::plus);
      if (i != j && i != hub && j != hub) {
        consider(i, Sign::plus, j, Sign::plus);
        consider(i, Sign::minus, j, Sign::minus);
      }
    }
  }
  d.ratio = d.max_other > 0.0 ? d.min_hub / d.max_other : std::numeric_limits<double>::infinity();
  return d;
}

}  // namespace wdistill
