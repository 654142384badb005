#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rfclust {

// Nonnegative per-feature weights aligned to a feature portfolio; they sum
// to one.
struct WeightVector {
  std::vector<std::size_t> feature_indices;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  friend bool operator==(const WeightVector&, const WeightVector&) = default;
};

// raw / Σraw, or uniform 1/p when every entry is zero. Entries must be finite
// and nonnegative.
WeightVector normalize_weights(std::span<const double> raw,
                               std::span<const std::size_t> feature_indices = {});

WeightVector uniform_weights(std::span<const std::size_t> feature_indices);

}  // namespace rfclust
