#include <cmath>
#include <cstddef>

#include "wdistill/simd/kernels.hpp"

namespace wdistill::simd::scalar {

double cosine_sum(std::span<const double> t, std::span<const double> w, double nu) {
  double acc = 0.0;
  for (std::size_t j = 0; j < t.size(); ++j) acc += w[j] * std::cos(nu * t[j]);
  return acc;
}

std::complex<double> cauchy_sum(std::span<const double> s, std::span<const double> c_re,
                                std::span<const double> c_im, double t, double r2, double eps) {
  double acc_re = 0.0, acc_im = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    const double d = t - s[j];
    const double den_re = r2 - d * d + eps * eps;
    const double den_im = 2.0 * eps * d;
    const double inv = 1.0 / (den_re * den_re + den_im * den_im);
    acc_re += (c_re[j] * den_re + c_im[j] * den_im) * inv;
    acc_im += (c_im[j] * den_re - c_re[j] * den_im) * inv;
  }
  return {acc_re, acc_im};
}

void apply_qubit_op(std::span<double> re, std::span<double> im, unsigned qubit, const Mat2c& op) {
  const std::size_t stride = std::size_t{1} << qubit;
  const std::size_t n = re.size();
  for (std::size_t base = 0; base < n; base += 2 * stride) {
    for (std::size_t i = base; i < base + stride; ++i) {
      const std::complex<double> v0{re[i], im[i]};
      const std::complex<double> v1{re[i + stride], im[i + stride]};
      const auto w0 = op[0] * v0 + op[1] * v1;
      const auto w1 = op[2] * v0 + op[3] * v1;
      re[i] = w0.real();
      im[i] = w0.imag();
      re[i + stride] = w1.real();
      im[i + stride] = w1.imag();
    }
  }
}

}  // namespace wdistill::simd::scalar
