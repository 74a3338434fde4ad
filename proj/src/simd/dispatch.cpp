#include <atomic>
#include <cstdlib>
#include <string>

#include "wdistill/errors.hpp"
#include "wdistill/simd/kernels.hpp"

namespace wdistill::simd {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() {
  if (const char* env = std::getenv("WDISTILL_SIMD")) {
    const std::string v = env;
    if (v == "scalar") return Isa::scalar;
    if (v == "avx2" && cpu_has_avx2()) return Isa::avx2;
  }
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) { return isa == Isa::scalar || cpu_has_avx2(); }

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_available(isa)) throw DomainError(std::string("ISA not available: ") + std::string(isa_name(isa)));
  current().store(isa, std::memory_order_relaxed);
}

double cosine_sum(std::span<const double> t, std::span<const double> w, double nu) {
  return active_isa() == Isa::avx2 ? avx2::cosine_sum(t, w, nu) : scalar::cosine_sum(t, w, nu);
}

std::complex<double> cauchy_sum(std::span<const double> s, std::span<const double> c_re,
                                std::span<const double> c_im, double t, double r2, double eps) {
  return active_isa() == Isa::avx2 ? avx2::cauchy_sum(s, c_re, c_im, t, r2, eps)
                                   : scalar::cauchy_sum(s, c_re, c_im, t, r2, eps);
}

void apply_qubit_op(std::span<double> re, std::span<double> im, unsigned qubit, const Mat2c& op) {
  if (active_isa() == Isa::avx2) {
    avx2::apply_qubit_op(re, im, qubit, op);
  } else {
    scalar::apply_qubit_op(re, im, qubit, op);
  }
}

}  // namespace wdistill::simd
