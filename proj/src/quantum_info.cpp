#include "wdistill/quantum_info.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "wdistill/errors.hpp"
#include "wdistill/simd/kernels.hpp"

namespace wdistill {

namespace {

using cd = std::complex<double>;

std::size_t parties_of(const Eigen::MatrixXcd& rho) {
  const auto d = static_cast<std::size_t>(rho.rows());
  if (rho.rows() != rho.cols() || d < 2 || !std::has_single_bit(d)) {
    throw ValidationError("density matrix must be square with dimension 2^N, N >= 1");
  }
  return static_cast<std::size_t>(std::countr_zero(d));
}

void require_normalized(const Eigen::MatrixXcd& rho) {
  const cd tr = rho.trace();
  if (std::abs(tr - 1.0) > 1e-8) {
    throw ValidationError("density matrix must be normalized (trace " + std::to_string(tr.real()) + ")");
  }
}

void require_hermitian(const Eigen::MatrixXcd& rho) {
  const double scale = std::max(1.0, rho.cwiseAbs().maxCoeff());
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ValidationError("density matrix must be Hermitian");
  }
}

// Gathers the bits selected by mask into a contiguous integer.
std::size_t compress(std::size_t x, std::uint32_t mask) {
  std::size_t out = 0;
  int k = 0;
  for (int b = 0; b < 32; ++b) {
    if (mask & (1u << b)) out |= ((x >> b) & 1u) << k++;
  }
  return out;
}

simd::Mat2c spin_op(const Vec3& n) {
  return {cd(n[2], 0.0), cd(n[0], -n[1]), cd(n[0], n[1]), cd(-n[2], 0.0)};
}

Vec3 unit(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

}  // namespace

PureState PureState::checked(std::size_t parties, Eigen::VectorXcd amp) {
  if (parties == 0 || parties > 16 || static_cast<std::size_t>(amp.size()) != (std::size_t{1} << parties)) {
    throw ValidationError("pure state length must be 2^N");
  }
  if (std::abs(amp.norm() - 1.0) > 1e-12) throw ValidationError("pure state must have unit norm");
  return PureState{parties, std::move(amp)};
}

Bipartition Bipartition::of(std::size_t parties, const std::vector<std::size_t>& subset) {
  Bipartition b{parties, 0};
  for (std::size_t p : subset) {
    if (p >= parties) throw ValidationError("bipartition party index out of range");
    b.mask |= 1u << (parties - 1 - p);
  }
  const std::uint32_t full = (parties >= 32) ? ~0u : ((1u << parties) - 1u);
  if (b.mask == 0 || b.mask == full) throw ValidationError("bipartition side must be nonempty and proper");
  return b;
}

std::vector<std::size_t> Bipartition::subset() const {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < parties; ++p) {
    if (mask & (1u << (parties - 1 - p))) out.push_back(p);
  }
  return out;
}

std::string Bipartition::str(const std::vector<std::string>& labels) const {
  auto name = [&](std::size_t p) {
    return p < labels.size() ? labels[p] : std::string(1, static_cast<char>('A' + p));
  };
  std::string left, right;
  for (std::size_t p = 0; p < parties; ++p) {
    ((mask & (1u << (parties - 1 - p))) ? left : right) += name(p);
  }
  return left + "|" + right;
}

std::vector<Bipartition> all_bipartitions(std::size_t parties) {
  if (parties < 2) throw DomainError("bipartitions need at least two parties");
  std::vector<Bipartition> out;
  const std::uint32_t top = 1u << (parties - 1);
  for (std::uint32_t rest = 0; rest < top - 1; ++rest) out.push_back({parties, top | rest});
  return out;
}

PureState target_distilled_state(std::size_t parties, std::size_t hub) {
  if (parties < 2) throw DomainError("target state needs N >= 2");
  if (hub >= parties) throw ValidationError("hub index out of range");
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(std::size_t{1} << parties);
  v(0) = 1.0;
  const std::size_t hub_bit = std::size_t{1} << (parties - 1 - hub);
  for (std::size_t i = 0; i < parties; ++i) {
    if (i != hub) v(hub_bit | (std::size_t{1} << (parties - 1 - i))) = -1.0;
  }
  v /= std::sqrt(static_cast<double>(parties));
  return PureState{parties, v};
}

PureState w_state(std::size_t parties) {
  if (parties < 2) throw DomainError("W state needs N >= 2");
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(std::size_t{1} << parties);
  for (std::size_t i = 0; i < parties; ++i) v(std::size_t{1} << i) = 1.0;
  v /= std::sqrt(static_cast<double>(parties));
  return PureState{parties, v};
}

PureState ghz_state(std::size_t parties) {
  if (parties < 2) throw DomainError("GHZ state needs N >= 2");
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(std::size_t{1} << parties);
  v(0) = v(v.size() - 1) = 1.0 / std::numbers::sqrt2;
  return PureState{parties, v};
}

namespace {

PureState hub_flips(const PureState& s, std::size_t hub, bool phase_first) {
  if (hub >= s.parties) throw ValidationError("hub index out of range");
  const std::size_t bit = std::size_t{1} << (s.parties - 1 - hub);
  PureState out = s;
  auto phase = [&](Eigen::VectorXcd& v) {
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      if (static_cast<std::size_t>(k) & bit) v(k) = -v(k);
    }
  };
  auto flip = [&](Eigen::VectorXcd& v) {
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      if (!(static_cast<std::size_t>(k) & bit)) std::swap(v(k), v(k | bit));
    }
  };
  if (phase_first) {
    phase(out.amp);
    flip(out.amp);
  } else {
    flip(out.amp);
    phase(out.amp);
  }
  return out;
}

}  // namespace

PureState local_rotation_to_W(const PureState& s, std::size_t hub) { return hub_flips(s, hub, true); }
PureState local_rotation_from_W(const PureState& s, std::size_t hub) { return hub_flips(s, hub, false); }

Eigen::MatrixXcd local_unitary(const std::vector<Eigen::Matrix2cd>& per_party) {
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(1, 1);
  for (const auto& m : per_party) {
    Eigen::MatrixXcd next(u.rows() * 2, u.cols() * 2);
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
      for (Eigen::Index c = 0; c < u.cols(); ++c) next.block<2, 2>(2 * r, 2 * c) = u(r, c) * m;
    }
    u = std::move(next);
  }
  return u;
}

double fidelity(const Eigen::MatrixXcd& rho, const PureState& s) {
  if (rho.rows() != s.amp.size()) throw ValidationError("state and density matrix dimensions differ");
  require_normalized(rho);
  return (s.amp.adjoint() * rho * s.amp)(0, 0).real();
}

std::vector<double> schmidt_spectrum(const PureState& s, const Bipartition& b) {
  if (b.parties != s.parties) throw ValidationError("bipartition does not match the state");
  const std::uint32_t full = (1u << s.parties) - 1u;
  const std::uint32_t rest = full & ~b.mask;
  const int ka = std::popcount(b.mask), kb = std::popcount(rest);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(Eigen::Index{1} << ka, Eigen::Index{1} << kb);
  for (Eigen::Index x = 0; x < s.amp.size(); ++x) {
    m(compress(x, b.mask), compress(x, rest)) = s.amp(x);
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  std::vector<double> out;
  for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k) {
    out.push_back(svd.singularValues()(k) * svd.singularValues()(k));
  }
  std::sort(out.rbegin(), out.rend());
  return out;
}

double negativity(const Eigen::MatrixXcd& rho, const Bipartition& b) {
  const std::size_t n = parties_of(rho);
  if (b.parties != n) throw ValidationError("bipartition does not match the density matrix");
  require_normalized(rho);
  require_hermitian(rho);
  const std::size_t d = std::size_t{1} << n;
  const std::size_t m = b.mask;
  Eigen::MatrixXcd pt(d, d);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) pt(r, c) = rho((r & ~m) | (c & m), (c & ~m) | (r & m));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(pt, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("partial-transpose spectrum failed", 0.0);
  return 0.5 * (es.eigenvalues().cwiseAbs().sum() - 1.0);
}

GmeResult genuine_multipartite_check(const PureState& s) {
  GmeResult out;
  out.genuine = true;
  for (const auto& cut : all_bipartitions(s.parties)) {
    const auto w = schmidt_spectrum(s, cut);
    const double second = w.size() > 1 ? w[1] : 0.0;
    out.evidence.push_back({cut, second});
    if (second < kSchmidtRankThreshold) {
      out.genuine = false;
      out.failing.push_back(cut);
    }
  }
  return out;
}

GmeResult genuine_multipartite_check(const Eigen::MatrixXcd& rho) {
  const std::size_t n = parties_of(rho);
  require_normalized(rho);
  require_hermitian(rho);
  const double purity = (rho * rho).trace().real();
  if (purity < 1.0 - 1e-6) {
    throw DomainError("state is mixed (purity " + std::to_string(purity) +
                      "); genuine multipartite entanglement is certified for pure states only");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho);
  Eigen::VectorXcd v = es.eigenvectors().col(es.eigenvectors().cols() - 1);
  v.normalize();
  return genuine_multipartite_check(PureState{n, v});
}

double correlation_value(const Eigen::MatrixXcd& rho, const std::vector<Vec3>& directions) {
  const std::size_t n = parties_of(rho);
  if (directions.size() != n) throw ValidationError("one direction per party is required");
  const std::size_t d = std::size_t{1} << n;
  // Column-major rho flattened: the low n bits of the flat index are the row.
  std::vector<double> re(d * d), im(d * d);
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t r = 0; r < d; ++r) {
      re[c * d + r] = rho(r, c).real();
      im[c * d + r] = rho(r, c).imag();
    }
  }
  for (std::size_t p = 0; p < n; ++p) {
    simd::apply_qubit_op(re, im, static_cast<unsigned>(n - 1 - p), spin_op(directions[p]));
  }
  double tr = 0.0;
  for (std::size_t r = 0; r < d; ++r) tr += re[r * d + r];
  return tr;
}

Vec3 MeasurementSettings::direction(std::size_t party, bool primed) const {
  const auto& a = angles.at(party);
  return primed ? unit(a[2], a[3]) : unit(a[0], a[1]);
}

std::vector<double> svetlichny_coefficients(std::size_t parties) {
  std::vector<double> c(std::size_t{1} << parties);
  for (std::size_t x = 0; x < c.size(); ++x) {
    const int t = std::popcount(x);
    c[x] = ((t * (t - 1) / 2) % 2 == 0) ? 1.0 : -1.0;
  }
  return c;
}

double svetlichny_value(const Eigen::MatrixXcd& rho, const MeasurementSettings& m) {
  const std::size_t n = parties_of(rho);
  if (n < 3) throw DomainError("Svetlichny polynomial needs N >= 3");
  if (m.parties() != n) throw ValidationError("settings must give two directions per party");
  const auto c = svetlichny_coefficients(n);
  double s = 0.0;
  std::vector<Vec3> dirs(n);
  for (std::size_t x = 0; x < c.size(); ++x) {
    for (std::size_t p = 0; p < n; ++p) dirs[p] = m.direction(p, (x >> (n - 1 - p)) & 1u);
    s += c[x] * correlation_value(rho, dirs);
  }
  return s;
}

namespace {

// Correlation tensor T[mu] = tr(rho sigma_mu1 x ... x sigma_muN), mu_p in
// {x, y, z}, party 0 the most significant base-3 digit.
std::vector<double> correlation_tensor(const Eigen::MatrixXcd& rho, std::size_t n) {
  std::size_t size = 1;
  for (std::size_t p = 0; p < n; ++p) size *= 3;
  std::vector<double> t(size);
  const std::size_t d = std::size_t{1} << n;
  for (std::size_t idx = 0; idx < size; ++idx) {
    // Pauli string as (flip mask, phase per basis state).
    std::size_t flip = 0, rem = idx;
    std::vector<int> mu(n);
    for (std::size_t p = n; p-- > 0;) {
      mu[p] = static_cast<int>(rem % 3);
      rem /= 3;
      if (mu[p] != 2) flip |= std::size_t{1} << (n - 1 - p);
    }
    cd acc = 0.0;
    for (std::size_t s = 0; s < d; ++s) {
      // P|s> = phase * |s ^ flip>, so tr(rho P) = sum_s phase(s) rho(s, s ^ flip).
      cd ph = 1.0;
      for (std::size_t p = 0; p < n; ++p) {
        const bool bit = (s >> (n - 1 - p)) & 1u;
        if (mu[p] == 1) ph *= bit ? cd(0.0, -1.0) : cd(0.0, 1.0);
        if (mu[p] == 2 && bit) ph = -ph;
      }
      acc += ph * rho(s, s ^ flip);
    }
    t[idx] = acc.real();
  }
  return t;
}

// Linear coefficients of S in party p's two directions with the others fixed.
std::array<Vec3, 2> party_gradient(const std::vector<double>& tensor, const std::vector<double>& coef,
                                   const std::vector<std::array<Vec3, 2>>& dirs, std::size_t n, std::size_t p) {
  std::array<Vec3, 2> g{};
  const std::size_t size = tensor.size();
  for (std::size_t x = 0; x < coef.size(); ++x) {
    const unsigned xp = (x >> (n - 1 - p)) & 1u;
    double v[3] = {0.0, 0.0, 0.0};
    for (std::size_t idx = 0; idx < size; ++idx) {
      double prod = tensor[idx];
      std::size_t rem = idx;
      int mup = 0;
      for (std::size_t q = n; q-- > 0;) {
        const int mu = static_cast<int>(rem % 3);
        rem /= 3;
        if (q == p) {
          mup = mu;
        } else {
          prod *= dirs[q][(x >> (n - 1 - q)) & 1u][mu];
        }
      }
      v[mup] += prod;
    }
    for (int k = 0; k < 3; ++k) g[xp][k] += coef[x] * v[k];
  }
  return g;
}

// Maximizes f on a circle of angles: coarse scan, then golden section in
// the bracket around the best sample.
template <class F>
double golden_max(F&& f, double center) {
  constexpr int coarse = 16;
  const double step = 2.0 * std::numbers::pi / coarse;
  double best = center, fbest = f(center);
  for (int k = 1; k < coarse; ++k) {
    const double x = center + k * step;
    const double fx = f(x);
    if (fx > fbest) {
      fbest = fx;
      best = x;
    }
  }
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = best - step, b = best + step;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > 1e-10) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return f(x) >= fbest ? x : best;
}

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

SvetlichnyOptimum optimize_svetlichny(const Eigen::MatrixXcd& rho, const SvetlichnyControls& ctl) {
  const std::size_t n = parties_of(rho);
  if (n < 3) throw DomainError("Svetlichny polynomial needs N >= 3");
  if (ctl.restarts < 1 || ctl.iterations < 1) throw ValidationError("restarts and iterations must be >= 1");
  require_normalized(rho);
  const auto tensor = correlation_tensor(rho, n);
  const auto coef = svetlichny_coefficients(n);

  SvetlichnyOptimum best;
  best.controls = ctl;
  best.value = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < ctl.restarts; ++r) {
    std::mt19937_64 rng(splitmix(ctl.seed ^ splitmix(static_cast<std::uint64_t>(r))));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    MeasurementSettings m;
    m.angles.resize(n);
    for (auto& a : m.angles) {
      a = {std::acos(2.0 * u01(rng) - 1.0), 2.0 * std::numbers::pi * u01(rng),
           std::acos(2.0 * u01(rng) - 1.0), 2.0 * std::numbers::pi * u01(rng)};
    }
    std::vector<std::array<Vec3, 2>> dirs(n);
    for (std::size_t p = 0; p < n; ++p) dirs[p] = {m.direction(p, false), m.direction(p, true)};

    double value = -std::numeric_limits<double>::infinity();
    bool converged = false;
    for (int it = 0; it < ctl.iterations && !converged; ++it) {
      double sweep_value = 0.0;
      for (std::size_t p = 0; p < n; ++p) {
        const auto g = party_gradient(tensor, coef, dirs, n, p);
        auto& a = m.angles[p];
        for (int primed = 0; primed < 2; ++primed) {
          double& th = a[2 * primed];
          double& ph = a[2 * primed + 1];
          th = golden_max([&](double t) { return dot(g[primed], unit(t, ph)); }, th);
          ph = golden_max([&](double f) { return dot(g[primed], unit(th, f)); }, ph);
          dirs[p][primed] = unit(th, ph);
        }
        sweep_value = dot(g[0], dirs[p][0]) + dot(g[1], dirs[p][1]);
      }
      converged = it > 0 && sweep_value - value <= 1e-13 * std::max(1.0, std::abs(sweep_value));
      value = std::max(value, sweep_value);
    }
    for (auto& a : m.angles) {
      for (double& x : a) x = std::remainder(x, 2.0 * std::numbers::pi);
    }
    if (value > best.value) {
      best.value = value;
      best.settings = m;
      best.best_restart = r;
      best.converged = converged;
    }
  }
  return best;
}

double hybrid_bound_oracle(std::size_t parties, bool fully_local) {
  if (parties < 3 || parties > 4) throw DomainError("hybrid bound enumeration supports 3 <= N <= 4");
  const auto c = svetlichny_coefficients(parties);
  const std::size_t n = parties;
  double best = 0.0;
  // Fully local: one outcome pair per party.
  for (std::size_t code = 0; code < (std::size_t{1} << (2 * n)); ++code) {
    double s = 0.0;
    for (std::size_t x = 0; x < c.size(); ++x) {
      double prod = c[x];
      for (std::size_t p = 0; p < n; ++p) {
        const unsigned xp = (x >> (n - 1 - p)) & 1u;
        prod *= ((code >> (2 * p + xp)) & 1u) ? -1.0 : 1.0;
      }
      s += prod;
    }
    best = std::max(best, std::abs(s));
  }
  if (fully_local) return best;
  // Hybrid: a joint deterministic table on the smaller side; the other side
  // answers each of its setting combinations with the best sign.
  for (const auto& cut : all_bipartitions(n)) {
    const std::uint32_t full = (1u << n) - 1u;
    std::uint32_t small = cut.mask, large = full & ~cut.mask;
    if (std::popcount(small) > std::popcount(large)) std::swap(small, large);
    const std::size_t ks = std::popcount(small), kl = std::popcount(large);
    for (std::size_t f = 0; f < (std::size_t{1} << (std::size_t{1} << ks)); ++f) {
      std::vector<double> bracket(std::size_t{1} << kl, 0.0);
      for (std::size_t x = 0; x < c.size(); ++x) {
        const double out = ((f >> compress(x, small)) & 1u) ? -1.0 : 1.0;
        bracket[compress(x, large)] += c[x] * out;
      }
      double s = 0.0;
      for (double v : bracket) s += std::abs(v);
      best = std::max(best, s);
    }
  }
  return best;
}

}  // namespace wdistill
