#pragma once

// Two-point amplitudes d_ij^{ab} = <0|Phi_i^a Phi_j^b|0> with
// Phi_i^{+-} = int dt eps_i(t) e^{+-i Omega_i t} phi(x_i, t).

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wdistill/field_kernel.hpp"
#include "wdistill/windows.hpp"

namespace wdistill {

enum class Sign { minus = -1, plus = +1 };

inline int sign_value(Sign s) { return static_cast<int>(s); }
inline char sign_char(Sign s) { return s == Sign::plus ? '+' : '-'; }
/// Throws ValidationError for anything other than '+' or '-'.
Sign parse_sign(char c);

struct DetectorSpec {
  std::string label;
  std::array<double, 3> position{};
  double gap = 1.0;  // Omega
  WindowSpec window;
};

double separation(const DetectorSpec& a, const DetectorSpec& b);

/// Labels unique and nonempty, gaps > 0, windows valid. Throws ValidationError.
void validate_detectors(const std::vector<DetectorSpec>& detectors);

struct AmplitudeResult {
  double value = 0.0;
  double error = 0.0;
  double imag_residual = 0.0;
  long evaluations = 0;
};

/// int_0^inf dk w(k) j0(k L) eps~_i(a Omega_i - omega) eps~_j(b Omega_j + omega).
AmplitudeResult exchange_amplitude_detailed(const DetectorSpec& i, Sign a, const DetectorSpec& j,
                                            Sign b, const FieldParams& p, const QuadControls& q = {});
double exchange_amplitude(const DetectorSpec& i, Sign a, const DetectorSpec& j, Sign b,
                          const FieldParams& p, const QuadControls& q = {});

/// Same integral with transforms prepared by the caller (used when building tables).
AmplitudeResult exchange_amplitude_prepared(const WindowTransform& fi, double gap_i, Sign a,
                                            const WindowTransform& fj, double gap_j, Sign b,
                                            double distance, const FieldParams& p,
                                            const QuadControls& q);

/// Massless double time integral against the closed-form kernel with
/// dt -> dt - i eps, extrapolated to eps -> 0 over a halving sequence.
/// An empty eps list picks a sequence scaled to the distance from the light
/// cone. Requires distinct positions. Throws NumericalError if the
/// extrapolation does not settle to rel_tol.
AmplitudeResult amplitude_time_domain_oracle(const DetectorSpec& i, Sign a, const DetectorSpec& j,
                                             Sign b, std::vector<double> eps_sequence = {},
                                             double rel_tol = 1e-9);

/// 2 Re<Theta_i> through the unitarity identity, i.e. d_ii^{-+}.
double self_energy_real(const DetectorSpec& i, const FieldParams& p, const QuadControls& q = {});

/// Independent massless evaluation of 2 Re<Theta_i> from the time-ordered
/// double integral. With A(u) = int eps(t+u) eps(t) dt,
///   2 Re<Theta> = -(1/(2 pi^2)) [pi Omega A(0)/2 + int_0^T (A'(u) cos Omega u - Omega A(u) sin Omega u)/u du].
AmplitudeResult self_energy_time_ordered_oracle(const DetectorSpec& i, double rel_tol = 1e-9);

struct RegimeFlags {
  bool causally_disconnected = false;  // max(T_i, T_j) < L_ij for every pair
  bool overlap_negligible = false;     // max |d_{i!=j}^{-+}| <= overlap_threshold * min d_ii^{-+}
  double min_separation_ratio = 0.0;   // min_ij L_ij / max(T_i, T_j)
  double max_overlap = 0.0;
  double min_emission = 0.0;
  double max_imag_residual = 0.0;      // of the reference window transforms
};

inline constexpr double kOverlapNegligibleThreshold = 1e-2;

class AmplitudeTable {
 public:
  AmplitudeTable() = default;
  explicit AmplitudeTable(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  /// Throws LookupError.
  std::size_t index_of(std::string_view label) const;

  bool has(std::size_t i, Sign a, std::size_t j, Sign b) const;
  /// Throws LookupError naming the missing index.
  double value(std::size_t i, Sign a, std::size_t j, Sign b) const;
  double error(std::size_t i, Sign a, std::size_t j, Sign b) const;
  void set(std::size_t i, Sign a, std::size_t j, Sign b, double value, double error = 0.0);

  std::string index_name(std::size_t i, Sign a, std::size_t j, Sign b) const;

  std::vector<double> self_energy;  // per detector, 2 Re<Theta_i>
  RegimeFlags flags;
  bool synthetic = false;
  bool causality_waived = false;

  /// Flat text: header comments, then one "i a j b value error" line per entry.
  std::string to_text() const;
  static AmplitudeTable from_text(std::string_view text);

 private:
  std::size_t slot(std::size_t i, Sign a, std::size_t j, Sign b) const;
  std::vector<std::string> labels_;
  std::vector<double> values_;
  std::vector<double> errors_;
};

struct TableOptions {
  bool waive_causality = false;
};

/// Every (i a, j b) entry plus self-energies and regime flags. Throws
/// ValidationError on a causality violation unless waived, and NumericalError
/// naming the failing index.
AmplitudeTable build_amplitude_table(const std::vector<DetectorSpec>& detectors, const FieldParams& p,
                                     const QuadControls& q = {}, const TableOptions& opt = {});

struct SyntheticParams {
  std::size_t detectors = 3;
  std::size_t hub = 2;
  double exchange = 1e-2;         // v, the hub exchange amplitude
  double kappa = 1e3;             // v / (every other amplitude); infinity zeroes them
  double overlap_fraction = 0.1;  // overlaps are overlap_fraction * v / kappa
};

/// Hub exchanges d_{i hub}^{++} = d_{hub i}^{++} (and the -- mirrors) equal v;
/// overlaps d_{i!=j}^{-+} and d_{i!=j}^{+-} equal overlap_fraction * v/kappa;
/// everything else equals v/kappa. Labels are A, B, C, ...
AmplitudeTable make_synthetic_table(const SyntheticParams& s);

/// The table detector i would give with its window amplitude multiplied by s:
/// entries scale by s per occurrence of i. Emission and overlap flags are
/// recomputed.
AmplitudeTable scale_detector(const AmplitudeTable& t, std::size_t i, double s);

struct Dominance {
  double ratio = 0.0;        // min |hub exchange| / max |other|
  double min_hub = 0.0;
  double max_other = 0.0;
  std::string limiting;      // index name of the largest competing amplitude
};

/// Competing amplitudes are all entries that reach the density matrix:
/// emissions d_ii^{-+}, overlaps d_{i!=j}^{-+}, and exchanges d_ij^{++} or
/// d_ij^{--} not involving the hub.
Dominance dominance_ratio(const AmplitudeTable& t, std::size_t hub);

}  // namespace wdistill
