#include "rfclust/importance.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "rfclust/clustering.hpp"
#include "rfclust/common.hpp"
#include "rfclust/rng.hpp"

namespace rfclust {

ImportanceResult unsupervised_importance(const Matrix& x_train, int m) {
  if (m < 2) throw ValidationError("unsupervised importance: m must be >= 2");
  if (x_train.rows() < static_cast<std::size_t>(m)) {
    throw ValidationError("unsupervised importance: fewer training problems (" +
                          std::to_string(x_train.rows()) + ") than clusters (" +
                          std::to_string(m) + ")");
  }
  if (x_train.cols() < 2) throw ValidationError("unsupervised importance: need >= 2 features");

  const ClusterAssignment baseline = cluster_rows(x_train, m);
  std::vector<double> n_diff(x_train.cols(), 0.0);
  for (std::size_t f = 0; f < x_train.cols(); ++f) {
    ClusterAssignment reduced;
    try {
      reduced = cluster_rows(x_train.without_column(f), m);
    } catch (const ValidationError& e) {
      throw ValidationError("unsupervised importance, feature " + std::to_string(f) +
                            " removed: " + e.what());
    }
    n_diff[f] = static_cast<double>(disagreement_count(baseline, reduced));
  }

  std::vector<std::size_t> indices(x_train.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  return {normalize_weights(n_diff, indices), n_diff};
}

ImportanceResult permutation_importance(const Forest& forest, const Matrix& x,
                                        std::span<const double> y, int n_repeats,
                                        std::uint64_t seed) {
  if (n_repeats < 1) throw ValidationError("permutation importance: n_repeats must be >= 1");
  if (x.cols() != forest.feature_count) {
    throw ValidationError("permutation importance: X width does not match the forest");
  }
  if (x.rows() != y.size()) throw ValidationError("permutation importance: X/y length mismatch");

  // Repeat r applies the same row permutation to whichever column is
  // shuffled, so the result does not depend on column order.
  std::vector<std::vector<std::size_t>> perms(static_cast<std::size_t>(n_repeats));
  for (int r = 0; r < n_repeats; ++r) {
    auto& perm = perms[static_cast<std::size_t>(r)];
    perm.resize(x.rows());
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
    rng.shuffle(std::span<std::size_t>(perm));
  }

  const double baseline = mae(forest.predict(x), y);
  std::vector<double> raw(x.cols(), 0.0);
  for (std::size_t f = 0; f < x.cols(); ++f) {
    Matrix shuffled = x;
    double increase = 0.0;
    for (const auto& perm : perms) {
      for (std::size_t i = 0; i < x.rows(); ++i) shuffled(i, f) = x(perm[i], f);
      increase += mae(forest.predict(shuffled), y) - baseline;
    }
    raw[f] = std::max(0.0, increase / static_cast<double>(n_repeats));
  }

  std::vector<std::size_t> indices(x.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  return {normalize_weights(raw, indices), raw};
}

}  // namespace rfclust
