#include <arm_neon.h>

#include <cmath>

#include "rfclust/kernels.hpp"

namespace rfclust::kernels::detail {
namespace {

DotTerms dot_terms_neon(const double* u, const double* v, std::size_t n) {
  float64x2_t uv = vdupq_n_f64(0.0);
  float64x2_t uu = vdupq_n_f64(0.0);
  float64x2_t vv = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t a = vld1q_f64(u + i);
    const float64x2_t b = vld1q_f64(v + i);
    uv = vfmaq_f64(uv, a, b);
    uu = vfmaq_f64(uu, a, a);
    vv = vfmaq_f64(vv, b, b);
  }
  DotTerms t{vaddvq_f64(uv), vaddvq_f64(uu), vaddvq_f64(vv)};
  for (; i < n; ++i) {
    t.uv = std::fma(u[i], v[i], t.uv);
    t.uu = std::fma(u[i], u[i], t.uu);
    t.vv = std::fma(v[i], v[i], t.vv);
  }
  return t;
}

DotTerms weighted_dot_terms_neon(const double* u, const double* v, const double* w,
                                 std::size_t n) {
  float64x2_t uv = vdupq_n_f64(0.0);
  float64x2_t uu = vdupq_n_f64(0.0);
  float64x2_t vv = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t ww = vld1q_f64(w + i);
    const float64x2_t a = vmulq_f64(ww, vld1q_f64(u + i));
    const float64x2_t b = vmulq_f64(ww, vld1q_f64(v + i));
    uv = vfmaq_f64(uv, a, b);
    uu = vfmaq_f64(uu, a, a);
    vv = vfmaq_f64(vv, b, b);
  }
  DotTerms t{vaddvq_f64(uv), vaddvq_f64(uu), vaddvq_f64(vv)};
  for (; i < n; ++i) {
    const double a = w[i] * u[i];
    const double b = w[i] * v[i];
    t.uv = std::fma(a, b, t.uv);
    t.uu = std::fma(a, a, t.uu);
    t.vv = std::fma(b, b, t.vv);
  }
  return t;
}

DotTerms centered_dot_terms_neon(const double* u, const double* v, double mu_u, double mu_v,
                                 std::size_t n) {
  const float64x2_t mu = vdupq_n_f64(mu_u);
  const float64x2_t mv = vdupq_n_f64(mu_v);
  float64x2_t uv = vdupq_n_f64(0.0);
  float64x2_t uu = vdupq_n_f64(0.0);
  float64x2_t vv = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t a = vsubq_f64(vld1q_f64(u + i), mu);
    const float64x2_t b = vsubq_f64(vld1q_f64(v + i), mv);
    uv = vfmaq_f64(uv, a, b);
    uu = vfmaq_f64(uu, a, a);
    vv = vfmaq_f64(vv, b, b);
  }
  DotTerms t{vaddvq_f64(uv), vaddvq_f64(uu), vaddvq_f64(vv)};
  for (; i < n; ++i) {
    const double a = u[i] - mu_u;
    const double b = v[i] - mu_v;
    t.uv = std::fma(a, b, t.uv);
    t.uu = std::fma(a, a, t.uu);
    t.vv = std::fma(b, b, t.vv);
  }
  return t;
}

double sum_neon(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double sum_abs_diff_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vabdq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += std::fabs(a[i] - b[i]);
  return s;
}

}  // namespace

const KernelTable neon_table{dot_terms_neon, weighted_dot_terms_neon, centered_dot_terms_neon,
                             sum_neon, sum_abs_diff_neon};

}  // namespace rfclust::kernels::detail
