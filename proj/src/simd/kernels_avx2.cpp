// Compiled with -mavx2 -mfma; only reached through the runtime dispatcher.
// Other architectures get scalar stand-ins that the dispatcher never selects.

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>

#include <cmath>
#include <cstddef>

#include "wdistill/simd/kernels.hpp"

namespace wdistill::simd::avx2 {
namespace {

// Cody-Waite split of pi/2 (fdlibm). Each part has at most 33 significant
// bits, so n * part is exact for |n| < 2^20.
constexpr double kPio2Hi = 1.57079632673412561417e+00;
constexpr double kPio2Mid = 6.07710050630396597660e-11;
constexpr double kPio2Lo = 2.02226624871116645580e-21;
constexpr double kReductionLimit = 5.0e5;

// fdlibm __kernel_sin / __kernel_cos minimax coefficients on [-pi/4, pi/4].
constexpr double S1 = -1.66666666666666324348e-01;
constexpr double S2 = 8.33333333332248946124e-03;
constexpr double S3 = -1.98412698298579493134e-04;
constexpr double S4 = 2.75573137070700676789e-06;
constexpr double S5 = -2.50507602534068634195e-08;
constexpr double S6 = 1.58969099521155010221e-10;
constexpr double C1 = 4.16666666666666019037e-02;
constexpr double C2 = -1.38888888888741095749e-03;
constexpr double C3 = 2.48015872894767294178e-05;
constexpr double C4 = -2.75573143513906633035e-07;
constexpr double C5 = 2.08757232129817482790e-09;
constexpr double C6 = -1.13596475577881948265e-11;

inline __m256d set(double v) { return _mm256_set1_pd(v); }

inline __m256d cos_pd(__m256d x) {
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, set(0.63661977236758134308)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, set(kPio2Hi), x);
  r = _mm256_fnmadd_pd(n, set(kPio2Mid), r);
  r = _mm256_fnmadd_pd(n, set(kPio2Lo), r);

  // quadrant q = n mod 4 in [0, 4)
  const __m256d quarter = _mm256_floor_pd(_mm256_mul_pd(n, set(0.25)));
  const __m256d q = _mm256_fnmadd_pd(quarter, set(4.0), n);

  const __m256d z = _mm256_mul_pd(r, r);

  __m256d ps = _mm256_fmadd_pd(z, set(S6), set(S5));
  ps = _mm256_fmadd_pd(z, ps, set(S4));
  ps = _mm256_fmadd_pd(z, ps, set(S3));
  ps = _mm256_fmadd_pd(z, ps, set(S2));
  ps = _mm256_fmadd_pd(z, ps, set(S1));
  const __m256d sin_r = _mm256_fmadd_pd(_mm256_mul_pd(r, z), ps, r);

  __m256d pc = _mm256_fmadd_pd(z, set(C6), set(C5));
  pc = _mm256_fmadd_pd(z, pc, set(C4));
  pc = _mm256_fmadd_pd(z, pc, set(C3));
  pc = _mm256_fmadd_pd(z, pc, set(C2));
  pc = _mm256_fmadd_pd(z, pc, set(C1));
  const __m256d hz = _mm256_mul_pd(set(0.5), z);
  const __m256d w = _mm256_sub_pd(set(1.0), hz);
  const __m256d corr = _mm256_fmadd_pd(_mm256_mul_pd(z, z), pc,
                                       _mm256_sub_pd(_mm256_sub_pd(set(1.0), w), hz));
  const __m256d cos_r = _mm256_add_pd(w, corr);

  const __m256d q1 = _mm256_cmp_pd(q, set(1.0), _CMP_EQ_OQ);
  const __m256d q2 = _mm256_cmp_pd(q, set(2.0), _CMP_EQ_OQ);
  const __m256d q3 = _mm256_cmp_pd(q, set(3.0), _CMP_EQ_OQ);
  const __m256d odd = _mm256_or_pd(q1, q3);
  const __m256d neg = _mm256_or_pd(q1, q2);
  const __m256d res = _mm256_blendv_pd(cos_r, sin_r, odd);
  return _mm256_xor_pd(res, _mm256_and_pd(neg, set(-0.0)));
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

void cos4(const double* x, double* out) { _mm256_storeu_pd(out, cos_pd(_mm256_loadu_pd(x))); }

double cosine_sum(std::span<const double> t, std::span<const double> w, double nu) {
  double tmax = 0.0;
  for (double v : t) tmax = std::max(tmax, std::abs(v));
  if (std::abs(nu) * tmax > kReductionLimit) return scalar::cosine_sum(t, w, nu);

  const std::size_t n = t.size();
  const __m256d vnu = set(nu);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    const __m256d c0 = cos_pd(_mm256_mul_pd(vnu, _mm256_loadu_pd(t.data() + j)));
    const __m256d c1 = cos_pd(_mm256_mul_pd(vnu, _mm256_loadu_pd(t.data() + j + 4)));
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(w.data() + j), c0, acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(w.data() + j + 4), c1, acc1);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; j < n; ++j) acc += w[j] * std::cos(nu * t[j]);
  return acc;
}

std::complex<double> cauchy_sum(std::span<const double> s, std::span<const double> c_re,
                                std::span<const double> c_im, double t, double r2, double eps) {
  const std::size_t n = s.size();
  const __m256d vt = set(t);
  const __m256d vbase = set(r2 + eps * eps);
  const __m256d v2eps = set(2.0 * eps);
  __m256d acc_re = _mm256_setzero_pd();
  __m256d acc_im = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d d = _mm256_sub_pd(vt, _mm256_loadu_pd(s.data() + j));
    const __m256d den_re = _mm256_fnmadd_pd(d, d, vbase);
    const __m256d den_im = _mm256_mul_pd(v2eps, d);
    const __m256d norm = _mm256_fmadd_pd(den_re, den_re, _mm256_mul_pd(den_im, den_im));
    const __m256d inv = _mm256_div_pd(set(1.0), norm);
    const __m256d cr = _mm256_loadu_pd(c_re.data() + j);
    const __m256d ci = _mm256_loadu_pd(c_im.data() + j);
    const __m256d num_re = _mm256_fmadd_pd(cr, den_re, _mm256_mul_pd(ci, den_im));
    const __m256d num_im = _mm256_fmsub_pd(ci, den_re, _mm256_mul_pd(cr, den_im));
    acc_re = _mm256_fmadd_pd(num_re, inv, acc_re);
    acc_im = _mm256_fmadd_pd(num_im, inv, acc_im);
  }
  std::complex<double> acc{hsum(acc_re), hsum(acc_im)};
  if (j < n) {
    acc += scalar::cauchy_sum(s.subspan(j), c_re.subspan(j), c_im.subspan(j), t, r2, eps);
  }
  return acc;
}

void apply_qubit_op(std::span<double> re, std::span<double> im, unsigned qubit, const Mat2c& op) {
  const std::size_t stride = std::size_t{1} << qubit;
  if (stride < 4) {
    scalar::apply_qubit_op(re, im, qubit, op);
    return;
  }
  const __m256d ar = set(op[0].real()), ai = set(op[0].imag());
  const __m256d br = set(op[1].real()), bi = set(op[1].imag());
  const __m256d cr = set(op[2].real()), ci = set(op[2].imag());
  const __m256d dr = set(op[3].real()), di = set(op[3].imag());
  const std::size_t n = re.size();
  for (std::size_t base = 0; base < n; base += 2 * stride) {
    for (std::size_t i = base; i < base + stride; i += 4) {
      double* p0r = re.data() + i;
      double* p0i = im.data() + i;
      double* p1r = p0r + stride;
      double* p1i = p0i + stride;
      const __m256d x0r = _mm256_loadu_pd(p0r), x0i = _mm256_loadu_pd(p0i);
      const __m256d x1r = _mm256_loadu_pd(p1r), x1i = _mm256_loadu_pd(p1i);
      // w0 = a x0 + b x1 ; w1 = c x0 + d x1
      __m256d w0r = _mm256_fmsub_pd(ar, x0r, _mm256_mul_pd(ai, x0i));
      w0r = _mm256_fmadd_pd(br, x1r, w0r);
      w0r = _mm256_fnmadd_pd(bi, x1i, w0r);
      __m256d w0i = _mm256_fmadd_pd(ar, x0i, _mm256_mul_pd(ai, x0r));
      w0i = _mm256_fmadd_pd(br, x1i, w0i);
      w0i = _mm256_fmadd_pd(bi, x1r, w0i);
      __m256d w1r = _mm256_fmsub_pd(cr, x0r, _mm256_mul_pd(ci, x0i));
      w1r = _mm256_fmadd_pd(dr, x1r, w1r);
      w1r = _mm256_fnmadd_pd(di, x1i, w1r);
      __m256d w1i = _mm256_fmadd_pd(cr, x0i, _mm256_mul_pd(ci, x0r));
      w1i = _mm256_fmadd_pd(dr, x1i, w1i);
      w1i = _mm256_fmadd_pd(di, x1r, w1i);
      _mm256_storeu_pd(p0r, w0r);
      _mm256_storeu_pd(p0i, w0i);
      _mm256_storeu_pd(p1r, w1r);
      _mm256_storeu_pd(p1i, w1i);
    }
  }
}

}  // namespace wdistill::simd::avx2

#else

#include <cmath>

#include "wdistill/simd/kernels.hpp"

namespace wdistill::simd::avx2 {

double cosine_sum(std::span<const double> t, std::span<const double> w, double nu) {
  return scalar::cosine_sum(t, w, nu);
}

std::complex<double> cauchy_sum(std::span<const double> s, std::span<const double> c_re,
                                std::span<const double> c_im, double t, double r2, double eps) {
  return scalar::cauchy_sum(s, c_re, c_im, t, r2, eps);
}

void apply_qubit_op(std::span<double> re, std::span<double> im, unsigned qubit, const Mat2c& op) {
  scalar::apply_qubit_op(re, im, qubit, op);
}

void cos4(const double* x, double* out) {
  for (int k = 0; k < 4; ++k) out[k] = std::cos(x[k]);
}

}  // namespace wdistill::simd::avx2

#endif
