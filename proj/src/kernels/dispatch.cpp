#include <atomic>
#include <cstdlib>
#include <string>

#include "rfclust/common.hpp"
#include "rfclust/kernels.hpp"

namespace rfclust::kernels {
namespace {

Backend best_available() {
#if defined(RFCLUST_HAVE_AVX2)
  if (backend_available(Backend::avx2)) return Backend::avx2;
#endif
#if defined(RFCLUST_HAVE_NEON)
  return Backend::neon;
#endif
  return Backend::scalar;
}

Backend initial_backend() {
  if (const char* env = std::getenv("RFCLUST_KERNELS"); env != nullptr && *env != '\0') {
    const std::string_view name(env);
    if (name == "auto") return best_available();
    auto parsed = parse_backend(name);
    if (parsed && backend_available(*parsed)) return *parsed;
    warn("RFCLUST_KERNELS=" + std::string(name) + " is not available here; using auto");
  }
  return best_available();
}

std::atomic<Backend>& active() {
  static std::atomic<Backend> backend{initial_backend()};
  return backend;
}

}  // namespace

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
  }
  return "unknown";
}

std::optional<Backend> parse_backend(std::string_view name) {
  if (name == "scalar") return Backend::scalar;
  if (name == "avx2") return Backend::avx2;
  if (name == "neon") return Backend::neon;
  return std::nullopt;
}

bool backend_available(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
#if defined(RFCLUST_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::neon:
#if defined(RFCLUST_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Backend b) {
  if (!backend_available(b)) {
    throw ValidationError("kernel backend '" + std::string(backend_name(b)) +
                          "' is not available on this CPU");
  }
  switch (b) {
#if defined(RFCLUST_HAVE_AVX2)
    case Backend::avx2: return detail::avx2_table;
#endif
#if defined(RFCLUST_HAVE_NEON)
    case Backend::neon: return detail::neon_table;
#endif
    default: return detail::scalar_table;
  }
}

Backend active_backend() { return active().load(std::memory_order_relaxed); }

void set_active_backend(Backend b) {
  table(b);  // availability check
  active().store(b, std::memory_order_relaxed);
}

namespace {
const KernelTable& current() { return table(active_backend()); }

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw ValidationError(std::string(what) + ": length mismatch");
}
}  // namespace

DotTerms dot_terms(std::span<const double> u, std::span<const double> v) {
  require_same_size(u.size(), v.size(), "dot_terms");
  return current().dot_terms(u.data(), v.data(), u.size());
}

DotTerms weighted_dot_terms(std::span<const double> u, std::span<const double> v,
                            std::span<const double> w) {
  require_same_size(u.size(), v.size(), "weighted_dot_terms");
  require_same_size(u.size(), w.size(), "weighted_dot_terms");
  return current().weighted_dot_terms(u.data(), v.data(), w.data(), u.size());
}

DotTerms centered_dot_terms(std::span<const double> u, std::span<const double> v, double mu_u,
                            double mu_v) {
  require_same_size(u.size(), v.size(), "centered_dot_terms");
  return current().centered_dot_terms(u.data(), v.data(), mu_u, mu_v, u.size());
}

double sum(std::span<const double> x) { return current().sum(x.data(), x.size()); }

double sum_abs_diff(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "sum_abs_diff");
  return current().sum_abs_diff(a.data(), b.data(), a.size());
}

}  // namespace rfclust::kernels
