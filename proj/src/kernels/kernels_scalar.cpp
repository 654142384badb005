#include <cmath>

#include "rfclust/kernels.hpp"

namespace rfclust::kernels::detail {
namespace {

DotTerms dot_terms_scalar(const double* u, const double* v, std::size_t n) {
  DotTerms t;
  for (std::size_t i = 0; i < n; ++i) {
    t.uv += u[i] * v[i];
    t.uu += u[i] * u[i];
    t.vv += v[i] * v[i];
  }
  return t;
}

DotTerms weighted_dot_terms_scalar(const double* u, const double* v, const double* w,
                                   std::size_t n) {
  DotTerms t;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = w[i] * u[i];
    const double b = w[i] * v[i];
    t.uv += a * b;
    t.uu += a * a;
    t.vv += b * b;
  }
  return t;
}

DotTerms centered_dot_terms_scalar(const double* u, const double* v, double mu_u, double mu_v,
                                   std::size_t n) {
  DotTerms t;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = u[i] - mu_u;
    const double b = v[i] - mu_v;
    t.uv += a * b;
    t.uu += a * a;
    t.vv += b * b;
  }
  return t;
}

double sum_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

double sum_abs_diff_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::fabs(a[i] - b[i]);
  return s;
}

}  // namespace

const KernelTable scalar_table{dot_terms_scalar, weighted_dot_terms_scalar,
                               centered_dot_terms_scalar, sum_scalar, sum_abs_diff_scalar};

}  // namespace rfclust::kernels::detail
