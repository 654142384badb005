#pragma once

// Data-parallel inner loops shared by the similarity, correlation and error
// code. Each kernel has a scalar reference implementation and SIMD variants;
// the variant is chosen once at runtime from the CPU's capabilities and can
// be pinned with the RFCLUST_KERNELS environment variable
// (scalar | avx2 | neon | auto).

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace rfclust::kernels {

// Sums of products for a pair of vectors: uv = Σ u·v, uu = Σ u², vv = Σ v².
struct DotTerms {
  double uv = 0.0;
  double uu = 0.0;
  double vv = 0.0;
};

enum class Backend { scalar, avx2, neon };

struct KernelTable {
  DotTerms (*dot_terms)(const double* u, const double* v, std::size_t n);
  // Terms of the element-wise scaled pair (w∘u, w∘v).
  DotTerms (*weighted_dot_terms)(const double* u, const double* v, const double* w, std::size_t n);
  // Terms of the centered pair (u - mu_u, v - mu_v).
  DotTerms (*centered_dot_terms)(const double* u, const double* v, double mu_u, double mu_v,
                                 std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  double (*sum_abs_diff)(const double* a, const double* b, std::size_t n);
};

std::string_view backend_name(Backend b);
std::optional<Backend> parse_backend(std::string_view name);

bool backend_available(Backend b);
// Table for a specific backend; throws if it is not available on this CPU.
const KernelTable& table(Backend b);

Backend active_backend();
// Overrides the runtime choice (tests and benchmarking).
void set_active_backend(Backend b);

DotTerms dot_terms(std::span<const double> u, std::span<const double> v);
DotTerms weighted_dot_terms(std::span<const double> u, std::span<const double> v,
                            std::span<const double> w);
DotTerms centered_dot_terms(std::span<const double> u, std::span<const double> v, double mu_u,
                            double mu_v);
double sum(std::span<const double> x);
double sum_abs_diff(std::span<const double> a, std::span<const double> b);

namespace detail {
extern const KernelTable scalar_table;
#if defined(RFCLUST_HAVE_AVX2)
extern const KernelTable avx2_table;
#endif
#if defined(RFCLUST_HAVE_NEON)
extern const KernelTable neon_table;
#endif
}  // namespace detail

}  // namespace rfclust::kernels
