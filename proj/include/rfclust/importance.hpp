#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rfclust/forest.hpp"
#include "rfclust/matrix.hpp"
#include "rfclust/weights.hpp"

namespace rfclust {

struct ImportanceResult {
  WeightVector weights;
  std::vector<double> raw;  // n_diff counts, or clamped mean MAE increases
};

// Clusters the training rows into m clusters with all features, then once
// per left-out feature; raw importance of feature i is the number of
// problems whose cluster changes (after optimal label matching) when i is
// removed.
ImportanceResult unsupervised_importance(const Matrix& x_train, int m);

// Mean increase in training MAE over n_repeats random shuffles of each
// column. Negative means are clamped to zero before normalizing.
ImportanceResult permutation_importance(const Forest& forest, const Matrix& x,
                                        std::span<const double> y, int n_repeats,
                                        std::uint64_t seed);

}  // namespace rfclust
