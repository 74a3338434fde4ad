#pragma once

// Data-parallel inner loops with a scalar reference implementation and an
// AVX2/FMA variant. The active variant is chosen once at startup from CPUID
// and can be pinned with WDISTILL_SIMD=scalar|avx2 or set_active_isa().

#include <array>
#include <complex>
#include <span>
#include <string_view>

namespace wdistill::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);
bool isa_available(Isa isa);
Isa active_isa();
/// Throws DomainError if the ISA is not available on this CPU.
void set_active_isa(Isa isa);

using Mat2c = std::array<std::complex<double>, 4>;  // row-major 2x2

// sum_j w_j cos(nu * t_j)
double cosine_sum(std::span<const double> t, std::span<const double> w, double nu);

// sum_j c_j / (r2 - (t - s_j - i eps)^2) with c_j = c_re[j] + i c_im[j]
std::complex<double> cauchy_sum(std::span<const double> s, std::span<const double> c_re,
                                std::span<const double> c_im, double t, double r2, double eps);

// In-place |psi> <- (op on qubit q) |psi>, split real/imag storage of length 2^n.
void apply_qubit_op(std::span<double> re, std::span<double> im, unsigned qubit, const Mat2c& op);

namespace scalar {
double cosine_sum(std::span<const double> t, std::span<const double> w, double nu);
std::complex<double> cauchy_sum(std::span<const double> s, std::span<const double> c_re,
                                std::span<const double> c_im, double t, double r2, double eps);
void apply_qubit_op(std::span<double> re, std::span<double> im, unsigned qubit, const Mat2c& op);
}  // namespace scalar

namespace avx2 {
double cosine_sum(std::span<const double> t, std::span<const double> w, double nu);
std::complex<double> cauchy_sum(std::span<const double> s, std::span<const double> c_re,
                                std::span<const double> c_im, double t, double r2, double eps);
void apply_qubit_op(std::span<double> re, std::span<double> im, unsigned qubit, const Mat2c& op);
/// Vectorized cosine of 4 lanes; exposed for accuracy tests.
void cos4(const double* x, double* out);
}  // namespace avx2

}  // namespace wdistill::simd
