#pragma once

// Vacuum moments by Wick's theorem, the reduced detector density matrix at
// lowest nonvanishing order, the spin-down filter and the distillation
// protocol.
//
// Basis: detector i is qubit i of N, party 0 is the most significant bit,
// bit value 0 is spin down. The reduced matrix is
//   rho(s, s') = <psi_s'|psi_s>,  |psi_s> = (-i)^k Phi_{i1}^+ ... Phi_{ik}^+ |0>
// for the flip set {i1 < ... < ik} of s, so entries are
//   i^(k'-k) <0| Phi_{s' descending}^- Phi_{s ascending}^+ |0>.

#include <complex>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wdistill/amplitudes.hpp"

namespace wdistill {

inline constexpr std::size_t kMaxParties = 8;

struct SpinPattern {
  unsigned bits = 0;
  std::size_t parties = 0;

  bool up(std::size_t party) const { return (bits >> (parties - 1 - party)) & 1u; }
  int flip_count() const;
  std::vector<std::size_t> flipped() const;  // ascending party indices
  std::string str() const;                   // e.g. "↓↑↑"
};

/// Throws ValidationError on characters other than the arrows, 'd'/'u' or '0'/'1'.
SpinPattern parse_spin_pattern(std::string_view s);

struct MomentFactor {
  std::size_t detector = 0;
  Sign sign = Sign::plus;
};
using MomentSpec = std::vector<MomentFactor>;

using Pairing = std::vector<std::pair<int, int>>;

/// All (2k-1)!! perfect matchings of positions 0..length-1 with p < q in
/// each pair; empty for odd length.
std::vector<Pairing> enumerate_pairings(std::size_t length);

/// Sum over matchings of the product of table(m[p], m[q]), evaluated as a
/// memoized hafnian over position subsets. Throws LookupError naming the
/// first missing pair amplitude.
double wick_moment(const MomentSpec& m, const AmplitudeTable& t);

inline constexpr int kVanishingOrder = std::numeric_limits<int>::max();

/// flip_count(s) + flip_count(s') when even, kVanishingOrder otherwise.
int leading_order_of_entry(const SpinPattern& s, const SpinPattern& sp);

struct ReducedDensityMatrix {
  std::size_t parties = 0;
  std::vector<std::string> labels;
  Eigen::MatrixXcd rho;
  Eigen::MatrixXi order;        // leading power of the coupling per entry
  double vacuum_correction = 0.0;  // order-2 term already added to rho(0, 0)
  bool normalized = false;

  std::size_t dim() const { return std::size_t{1} << parties; }
  SpinPattern pattern(std::size_t index) const { return {static_cast<unsigned>(index), parties}; }

  /// Row-major [re, im] pairs with a parallel leading-order array (null for
  /// parity-forbidden entries).
  std::string to_json() const;
  static ReducedDensityMatrix from_json(std::string_view text);
};

struct AssemblyOptions {
  // Adds -sum_i d_ii^{-+} to the vacuum diagonal.
  bool vacuum_correction = true;
};

/// Every entry at its leading order. Throws ValidationError for N outside
/// [2, 8] and LookupError for an incomplete table.
ReducedDensityMatrix assemble_rho(const AmplitudeTable& t, const AssemblyOptions& opt = {});

/// Multiplies entry (s, s') by prod_i eta_i^(down_i(s) + down_i(s')).
/// Throws ValidationError unless every eta is in (0, 1] and one per party.
ReducedDensityMatrix apply_filter(const ReducedDensityMatrix& rho, const std::vector<double>& eta);

enum class FilterMode { automatic, explicit_eta };

struct FilterSpec {
  FilterMode mode = FilterMode::automatic;
  std::vector<double> eta;       // explicit mode only
  double equal_tolerance = 1e-6;  // relative spread accepted as equal hub exchanges
};

/// Normalized matrices may dip this far below zero (relative to the largest
/// eigenvalue) from perturbative truncation.
inline constexpr double kPositivityTolerance = 1e-8;

struct DistillationDiagnostics {
  double eta_squared = 0.0;
  double hub_spread = 0.0;  // (max - min)/max over |hub exchanges|
  bool hub_equal = true;
  Dominance dominance;
  bool outside_asymptotic_regime = false;
  double fidelity = 0.0;
  double purity = 0.0;
  std::vector<double> eigenvalues;  // descending
};

struct DistillationResult {
  ReducedDensityMatrix filtered;   // leading order, unnormalized
  ReducedDensityMatrix distilled;  // normalized
  DistillationDiagnostics diagnostics;
};

/// Filter with eta^2 = |hub exchange| (automatic) or explicit eta, then
/// normalize. The vacuum diagonal is kept at leading order so the filtered
/// matrix is a Gram matrix. Throws NumericalError if the spectrum falls below
/// -kPositivityTolerance times its maximum.
DistillationResult distillation_protocol(const AmplitudeTable& t, std::size_t hub, const FilterSpec& f = {});

}  // namespace wdistill
