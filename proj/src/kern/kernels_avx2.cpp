// AVX2/FMA backend. This translation unit is compiled with -mavx2 -mfma;
// dispatch.cpp only hands out these pointers after a runtime CPU check.

#include "mmg/kern/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>
#include <cstddef>

namespace mmg::kern {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_avx2(double* y, const double* x, std::size_t n, double alpha) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_avx2(const double* w, const double* x, double* y, std::size_t rows,
                 std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_avx2(w + r * cols, x, cols);
}

void matvec_t_acc_avx2(const double* w, const double* x, double* y, std::size_t rows,
                       std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy_avx2(y, w + r * cols, cols, x[r]);
}

void rank1_acc_avx2(double* w, const double* x, const double* y, std::size_t rows,
                    std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy_avx2(w + r * cols, y, cols, x[r]);
}

void tanh_fwd_avx2(const double* x, double* y, std::size_t n) {
  // transcendental stays on libm so both backends produce the same tanh
  for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

void tanh_bwd_avx2(const double* act, const double* g, double* out, std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_loadu_pd(act + i);
    const __m256d gg = _mm256_loadu_pd(g + i);
    const __m256d sech2 = _mm256_fnmadd_pd(a, a, one);  // 1 - a*a
    _mm256_storeu_pd(out + i, _mm256_mul_pd(gg, sech2));
  }
  for (; i < n; ++i) out[i] = g[i] * (1.0 - act[i] * act[i]);
}

void adam_step_avx2(double* p, const double* g, double* m, double* v, std::size_t n,
                    double lr, double beta1, double beta2, double eps, double bc1,
                    double bc2) {
  const __m256d vb1 = _mm256_set1_pd(beta1);
  const __m256d vb1c = _mm256_set1_pd(1.0 - beta1);
  const __m256d vb2 = _mm256_set1_pd(beta2);
  const __m256d vb2c = _mm256_set1_pd(1.0 - beta2);
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d veps = _mm256_set1_pd(eps);
  const __m256d vbc1 = _mm256_set1_pd(bc1);
  const __m256d vbc2 = _mm256_set1_pd(bc2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gi = _mm256_loadu_pd(g + i);
    __m256d mi = _mm256_loadu_pd(m + i);
    __m256d vi = _mm256_loadu_pd(v + i);
    mi = _mm256_fmadd_pd(vb1, mi, _mm256_mul_pd(vb1c, gi));
    vi = _mm256_fmadd_pd(vb2, vi, _mm256_mul_pd(vb2c, _mm256_mul_pd(gi, gi)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d m_hat = _mm256_mul_pd(mi, vbc1);
    const __m256d v_hat = _mm256_mul_pd(vi, vbc2);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(v_hat), veps);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, m_hat), denom);
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    p[i] -= lr * (m[i] * bc1) / (std::sqrt(v[i] * bc2) + eps);
  }
}

}  // namespace

const Kernels* avx2_kernels_impl() {
  static const Kernels k = {
      "avx2",          dot_avx2,      axpy_avx2,     matvec_avx2,
      matvec_t_acc_avx2, rank1_acc_avx2, tanh_fwd_avx2, tanh_bwd_avx2,
      adam_step_avx2,
  };
  return &k;
}

}  // namespace mmg::kern

#else

namespace mmg::kern {
const Kernels* avx2_kernels_impl() { return nullptr; }
}  // namespace mmg::kern

#endif
