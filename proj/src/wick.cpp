#include "wdistill/wick.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>

#include <Eigen/Eigenvalues>
#include "json.hpp"

#include "wdistill/errors.hpp"
#include "wdistill/quantum_info.hpp"

namespace wdistill {

namespace {

using cd = std::complex<double>;
using nlohmann::json;

constexpr const char* kDown = "↓";
constexpr const char* kUp = "↑";

}  // namespace

int SpinPattern::flip_count() const { return std::popcount(bits); }

std::vector<std::size_t> SpinPattern::flipped() const {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < parties; ++p) {
    if (up(p)) out.push_back(p);
  }
  return out;
}

std::string SpinPattern::str() const {
  std::string out;
  for (std::size_t p = 0; p < parties; ++p) out += up(p) ? kUp : kDown;
  return out;
}

SpinPattern parse_spin_pattern(std::string_view s) {
  SpinPattern out;
  const std::string_view down = kDown, upa = kUp;
  while (!s.empty()) {
    unsigned bit = 0;
    if (s.starts_with(down)) {
      s.remove_prefix(down.size());
    } else if (s.starts_with(upa)) {
      bit = 1;
      s.remove_prefix(upa.size());
    } else if (s[0] == 'd' || s[0] == '0') {
      s.remove_prefix(1);
    } else if (s[0] == 'u' || s[0] == '1') {
      bit = 1;
      s.remove_prefix(1);
    } else {
      throw ValidationError("spin pattern may only contain down/up arrows, d/u or 0/1");
    }
    out.bits = (out.bits << 1) | bit;
    ++out.parties;
  }
  if (out.parties == 0 || out.parties > kMaxParties) throw ValidationError("spin pattern length must be 1..8");
  return out;
}

std::vector<Pairing> enumerate_pairings(std::size_t length) {
  std::vector<Pairing> out;
  if (length % 2 != 0) return out;
  Pairing current;
  std::vector<bool> used(length, false);
  std::function<void()> rec = [&]() {
    std::size_t first = 0;
    while (first < length && used[first]) ++first;
    if (first == length) {
      out.push_back(current);
      return;
    }
    used[first] = true;
    for (std::size_t j = first + 1; j < length; ++j) {
      if (used[j]) continue;
      used[j] = true;
      current.emplace_back(static_cast<int>(first), static_cast<int>(j));
      rec();
      current.pop_back();
      used[j] = false;
    }
    used[first] = false;
  };
  rec();
  return out;
}

double wick_moment(const MomentSpec& m, const AmplitudeTable& t) {
  const std::size_t len = m.size();
  if (len % 2 != 0) return 0.0;
  if (len == 0) return 1.0;
  if (len > 2 * kMaxParties) throw ValidationError("moments longer than 16 factors are not supported");
  std::vector<double> pair(len * len, 0.0);
  for (std::size_t p = 0; p < len; ++p) {
    for (std::size_t q = p + 1; q < len; ++q) {
      pair[p * len + q] = t.value(m[p].detector, m[p].sign, m[q].detector, m[q].sign);
    }
  }
  // haf[mask] is the moment of the factors left in mask, always pairing the
  // lowest remaining position first.
  std::vector<double> haf(std::size_t{1} << len, std::numeric_limits<double>::quiet_NaN());
  haf[0] = 1.0;
  std::function<double(std::uint32_t)> rec = [&](std::uint32_t mask) -> double {
    double& memo = haf[mask];
    if (!std::isnan(memo)) return memo;
    const int i = std::countr_zero(mask);
    const std::uint32_t rest = mask & ~(1u << i);
    double sum = 0.0;
    for (std::uint32_t r = rest; r != 0; r &= r - 1) {
      const int j = std::countr_zero(r);
      sum += pair[i * len + j] * rec(rest & ~(1u << j));
    }
    memo = sum;
    return sum;
  };
  return rec(static_cast<std::uint32_t>((std::uint64_t{1} << len) - 1));
}

int leading_order_of_entry(const SpinPattern& s, const SpinPattern& sp) {
  const int k = s.flip_count() + sp.flip_count();
  return k % 2 == 0 ? k : kVanishingOrder;
}

std::string ReducedDensityMatrix::to_json() const {
  json j;
  j["parties"] = parties;
  j["labels"] = labels;
  json basis = json::array();
  for (std::size_t s = 0; s < dim(); ++s) basis.push_back(pattern(s).str());
  j["basis"] = basis;
  j["normalized"] = normalized;
  j["vacuum_correction"] = vacuum_correction;
  json entries = json::array(), orders = json::array();
  for (Eigen::Index r = 0; r < rho.rows(); ++r) {
    for (Eigen::Index c = 0; c < rho.cols(); ++c) {
      entries.push_back({rho(r, c).real(), rho(r, c).imag()});
      if (order(r, c) == kVanishingOrder) {
        orders.push_back(nullptr);
      } else {
        orders.push_back(order(r, c));
      }
    }
  }
  j["entries"] = entries;
  j["leading_order"] = orders;
  return j.dump(1);
}

ReducedDensityMatrix ReducedDensityMatrix::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("density matrix JSON does not parse: ") + e.what());
  }
  try {
    ReducedDensityMatrix m;
    m.parties = j.at("parties").get<std::size_t>();
    if (m.parties < 1 || m.parties > kMaxParties) throw ValidationError("parties must be in [1, 8]");
    m.labels = j.at("labels").get<std::vector<std::string>>();
    m.normalized = j.at("normalized").get<bool>();
    m.vacuum_correction = j.value("vacuum_correction", 0.0);
    const auto& e = j.at("entries");
    const auto& o = j.at("leading_order");
    const std::size_t d = m.dim();
    if (e.size() != d * d || o.size() != d * d) throw ValidationError("density matrix JSON has the wrong entry count");
    m.rho.resize(d, d);
    m.order.resize(d, d);
    for (std::size_t k = 0; k < d * d; ++k) {
      const auto r = static_cast<Eigen::Index>(k / d), c = static_cast<Eigen::Index>(k % d);
      m.rho(r, c) = cd(e[k].at(0).get<double>(), e[k].at(1).get<double>());
      m.order(r, c) = o[k].is_null() ? kVanishingOrder : o[k].get<int>();
    }
    return m;
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("density matrix JSON is malformed: ") + ex.what());
  }
}

ReducedDensityMatrix assemble_rho(const AmplitudeTable& t, const AssemblyOptions& opt) {
  const std::size_t n = t.size();
  if (n < 2 || n > kMaxParties) throw ValidationError("density matrix assembly needs 2 <= N <= 8");
  ReducedDensityMatrix m;
  m.parties = n;
  m.labels = t.labels();
  const std::size_t d = m.dim();
  m.rho = Eigen::MatrixXcd::Zero(d, d);
  m.order = Eigen::MatrixXi::Constant(d, d, kVanishingOrder);
  MomentSpec moment;
  for (std::size_t r = 0; r < d; ++r) {
    const auto s = m.pattern(r);
    // Lower triangle is computed, the upper one mirrored, so Hermiticity is exact.
    for (std::size_t c = 0; c <= r; ++c) {
      const auto sp = m.pattern(c);
      const int ord = leading_order_of_entry(s, sp);
      if (ord == kVanishingOrder) continue;
      moment.clear();
      const auto bra = sp.flipped();
      for (auto it = bra.rbegin(); it != bra.rend(); ++it) moment.push_back({*it, Sign::minus});
      for (std::size_t p : s.flipped()) moment.push_back({p, Sign::plus});
      // i^(k' - k) with k + k' even is a sign.
      const int half = (sp.flip_count() - s.flip_count()) / 2;
      const double v = (half % 2 == 0 ? 1.0 : -1.0) * wick_moment(moment, t);
      m.rho(r, c) = v;
      m.rho(c, r) = v;
      m.order(r, c) = m.order(c, r) = ord;
    }
  }
  if (opt.vacuum_correction) {
    double depletion = 0.0;
    for (std::size_t i = 0; i < n; ++i) depletion += t.value(i, Sign::minus, i, Sign::plus);
    m.vacuum_correction = -depletion;
    m.rho(0, 0) += m.vacuum_correction;
  }
  return m;
}

ReducedDensityMatrix apply_filter(const ReducedDensityMatrix& rho, const std::vector<double>& eta) {
  std::vector<std::string> bad;
  if (eta.size() != rho.parties) bad.push_back("filter needs one eta per detector");
  for (double e : eta) {
    if (!(e > 0.0 && e <= 1.0)) bad.push_back("filter eta must lie in (0, 1], got " + std::to_string(e));
  }
  if (!bad.empty()) throw ValidationError(bad);
  ReducedDensityMatrix out = rho;
  const std::size_t d = rho.dim();
  std::vector<double> ket(d, 1.0);
  for (std::size_t s = 0; s < d; ++s) {
    for (std::size_t p = 0; p < rho.parties; ++p) {
      if (!rho.pattern(s).up(p)) ket[s] *= eta[p];
    }
  }
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) out.rho(r, c) *= ket[r] * ket[c];
  }
  return out;
}

DistillationResult distillation_protocol(const AmplitudeTable& t, std::size_t hub, const FilterSpec& f) {
  const std::size_t n = t.size();
  if (hub >= n) throw ValidationError("hub index out of range");
  if (n < 2 || n > kMaxParties) throw ValidationError("distillation needs 2 <= N <= 8");
  DistillationResult out;
  auto& dg = out.diagnostics;
  dg.dominance = dominance_ratio(t, hub);
  dg.outside_asymptotic_regime = !(dg.dominance.ratio > 1.0);

  std::vector<double> eta;
  if (f.mode == FilterMode::automatic) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0, log_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == hub) continue;
      const double v = std::abs(t.value(i, Sign::plus, hub, Sign::plus));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      log_sum += std::log(v);
    }
    if (!(lo > 0.0)) throw ValidationError("automatic filter needs nonzero hub exchange amplitudes");
    dg.eta_squared = std::exp(log_sum / static_cast<double>(n - 1));
    dg.hub_spread = (hi - lo) / hi;
    dg.hub_equal = dg.hub_spread <= f.equal_tolerance;
    if (dg.eta_squared > 1.0) throw ValidationError("automatic filter needs |hub exchange| <= 1");
    eta.assign(n, std::sqrt(dg.eta_squared));
  } else {
    eta = f.eta.size() == 1 ? std::vector<double>(n, f.eta[0]) : f.eta;
    dg.eta_squared = eta.empty() ? 0.0 : eta[0] * eta[0];
  }

  out.filtered = apply_filter(assemble_rho(t, {false}), eta);
  const double tr = out.filtered.rho.trace().real();
  if (!(tr > 0.0)) throw NumericalError("filtered density matrix has nonpositive trace", tr);
  out.distilled = out.filtered;
  out.distilled.rho /= tr;
  out.distilled.normalized = true;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(out.distilled.rho, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("distilled spectrum failed", 0.0);
  const auto& ev = es.eigenvalues();
  for (Eigen::Index k = ev.size(); k-- > 0;) dg.eigenvalues.push_back(ev(k));
  if (dg.eigenvalues.back() < -kPositivityTolerance * dg.eigenvalues.front()) {
    throw NumericalError("distilled matrix is not positive within tolerance", dg.eigenvalues.back());
  }
  dg.purity = (out.distilled.rho * out.distilled.rho).trace().real();
  dg.fidelity = fidelity(out.distilled.rho, target_distilled_state(n, hub));
  return out;
}

}  // namespace wdistill
