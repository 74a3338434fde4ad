#pragma once

// State certification on N qubits: fidelity, local conversion to W, Schmidt
// spectra, negativity, genuine multipartite entanglement for pure states and
// Svetlichny-type correlations.
//
// Same basis as the density matrix: party 0 is the most significant bit and
// bit value 0 is spin down. Spin observables use sigma_z = diag(1, -1) in the
// (down, up) basis.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace wdistill {

struct PureState {
  std::size_t parties = 0;
  Eigen::VectorXcd amp;

  /// Throws ValidationError unless amp has length 2^parties and unit norm within 1e-12.
  static PureState checked(std::size_t parties, Eigen::VectorXcd amp);
  Eigen::MatrixXcd projector() const { return amp * amp.adjoint(); }
};

struct Bipartition {
  std::size_t parties = 0;
  std::uint32_t mask = 0;  // bit (parties - 1 - p) set when party p is in S

  /// Throws ValidationError unless S is nonempty and proper.
  static Bipartition of(std::size_t parties, const std::vector<std::size_t>& subset);
  std::vector<std::size_t> subset() const;
  std::string str(const std::vector<std::string>& labels = {}) const;  // e.g. "A|BC"
};

/// Each unordered split once, with party 0 always in S.
std::vector<Bipartition> all_bipartitions(std::size_t parties);

/// (|all down> - sum_{i != hub} |up at i and hub>)/sqrt(N). Throws DomainError for N < 2.
PureState target_distilled_state(std::size_t parties, std::size_t hub);
/// Uniform superposition of the N single-up patterns.
PureState w_state(std::size_t parties);
PureState ghz_state(std::size_t parties);

/// Phase flip then bit flip on the hub qubit.
PureState local_rotation_to_W(const PureState& s, std::size_t hub);
/// Inverse of local_rotation_to_W.
PureState local_rotation_from_W(const PureState& s, std::size_t hub);

/// Kronecker product of one 2x2 unitary per party (party 0 leftmost).
Eigen::MatrixXcd local_unitary(const std::vector<Eigen::Matrix2cd>& per_party);

/// <s|rho|s>. Throws ValidationError unless trace(rho) = 1 within 1e-8.
double fidelity(const Eigen::MatrixXcd& rho, const PureState& s);

/// Squared Schmidt coefficients, descending.
std::vector<double> schmidt_spectrum(const PureState& s, const Bipartition& b);

/// (||rho^{T_S}||_1 - 1)/2. Throws ValidationError for an unnormalized or
/// non-Hermitian rho.
double negativity(const Eigen::MatrixXcd& rho, const Bipartition& b);

inline constexpr double kSchmidtRankThreshold = 1e-8;

struct GmeEvidence {
  Bipartition cut;
  double second_weight = 0.0;
};

struct GmeResult {
  bool genuine = false;
  std::vector<GmeEvidence> evidence;  // one per bipartition
  std::vector<Bipartition> failing;
};

GmeResult genuine_multipartite_check(const PureState& s);
/// Mixed input (purity below 1 - 1e-6) throws DomainError; otherwise the
/// dominant eigenvector is checked.
GmeResult genuine_multipartite_check(const Eigen::MatrixXcd& rho);

using Vec3 = std::array<double, 3>;

/// tr(rho (n_1.sigma) x ... x (n_N.sigma)).
double correlation_value(const Eigen::MatrixXcd& rho, const std::vector<Vec3>& directions);

struct MeasurementSettings {
  // Per party: unprimed and primed directions as polar/azimuthal angles.
  std::vector<std::array<double, 4>> angles;  // theta, phi, theta', phi'

  std::size_t parties() const { return angles.size(); }
  Vec3 direction(std::size_t party, bool primed) const;
};

/// Coefficients c(x) of the Svetlichny polynomial over setting choices x in
/// {0,1}^N (bit N-1-p selects the primed setting of party p); S = sum_x c(x) E(x).
std::vector<double> svetlichny_coefficients(std::size_t parties);

/// Throws DomainError for N < 3 and ValidationError for mismatched settings.
double svetlichny_value(const Eigen::MatrixXcd& rho, const MeasurementSettings& m);

struct SvetlichnyControls {
  std::uint64_t seed = 1;
  int restarts = 64;
  int iterations = 200;
};

struct SvetlichnyOptimum {
  double value = 0.0;
  MeasurementSettings settings;
  int best_restart = 0;
  bool converged = false;
  SvetlichnyControls controls;
};

/// Multi-start coordinate-wise golden-section ascent over the 4N angles.
/// Deterministic in (seed, restarts, iterations); ties go to the lowest restart.
SvetlichnyOptimum optimize_svetlichny(const Eigen::MatrixXcd& rho, const SvetlichnyControls& c = {});

/// Maximum of the polynomial over deterministic hybrid strategies (joint
/// outcomes within each side of a bipartition), or over fully local ones.
/// Throws DomainError outside 3 <= N <= 4.
double hybrid_bound_oracle(std::size_t parties, bool fully_local = false);

}  // namespace wdistill
