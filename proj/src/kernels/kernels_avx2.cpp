// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <cmath>

#include "rfclust/kernels.hpp"

namespace rfclust::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

DotTerms dot_terms_avx2(const double* u, const double* v, std::size_t n) {
  __m256d uv = _mm256_setzero_pd();
  __m256d uu = _mm256_setzero_pd();
  __m256d vv = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_loadu_pd(u + i);
    const __m256d b = _mm256_loadu_pd(v + i);
    uv = _mm256_fmadd_pd(a, b, uv);
    uu = _mm256_fmadd_pd(a, a, uu);
    vv = _mm256_fmadd_pd(b, b, vv);
  }
  DotTerms t{hsum(uv), hsum(uu), hsum(vv)};
  for (; i < n; ++i) {
    t.uv = std::fma(u[i], v[i], t.uv);
    t.uu = std::fma(u[i], u[i], t.uu);
    t.vv = std::fma(v[i], v[i], t.vv);
  }
  return t;
}

DotTerms weighted_dot_terms_avx2(const double* u, const double* v, const double* w,
                                 std::size_t n) {
  __m256d uv = _mm256_setzero_pd();
  __m256d uu = _mm256_setzero_pd();
  __m256d vv = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d ww = _mm256_loadu_pd(w + i);
    const __m256d a = _mm256_mul_pd(ww, _mm256_loadu_pd(u + i));
    const __m256d b = _mm256_mul_pd(ww, _mm256_loadu_pd(v + i));
    uv = _mm256_fmadd_pd(a, b, uv);
    uu = _mm256_fmadd_pd(a, a, uu);
    vv = _mm256_fmadd_pd(b, b, vv);
  }
  DotTerms t{hsum(uv), hsum(uu), hsum(vv)};
  for (; i < n; ++i) {
    const double a = w[i] * u[i];
    const double b = w[i] * v[i];
    t.uv = std::fma(a, b, t.uv);
    t.uu = std::fma(a, a, t.uu);
    t.vv = std::fma(b, b, t.vv);
  }
  return t;
}

DotTerms centered_dot_terms_avx2(const double* u, const double* v, double mu_u, double mu_v,
                                 std::size_t n) {
  const __m256d mu = _mm256_set1_pd(mu_u);
  const __m256d mv = _mm256_set1_pd(mu_v);
  __m256d uv = _mm256_setzero_pd();
  __m256d uu = _mm256_setzero_pd();
  __m256d vv = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_sub_pd(_mm256_loadu_pd(u + i), mu);
    const __m256d b = _mm256_sub_pd(_mm256_loadu_pd(v + i), mv);
    uv = _mm256_fmadd_pd(a, b, uv);
    uu = _mm256_fmadd_pd(a, a, uu);
    vv = _mm256_fmadd_pd(b, b, vv);
  }
  DotTerms t{hsum(uv), hsum(uu), hsum(vv)};
  for (; i < n; ++i) {
    const double a = u[i] - mu_u;
    const double b = v[i] - mu_v;
    t.uv = std::fma(a, b, t.uv);
    t.uu = std::fma(a, a, t.uu);
    t.vv = std::fma(b, b, t.vv);
  }
  return t;
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double sum_abs_diff_avx2(const double* a, const double* b, std::size_t n) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign_mask, d));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += std::fabs(a[i] - b[i]);
  return s;
}

}  // namespace

const KernelTable avx2_table{dot_terms_avx2, weighted_dot_terms_avx2, centered_dot_terms_avx2,
                             sum_avx2, sum_abs_diff_avx2};

}  // namespace rfclust::kernels::detail
