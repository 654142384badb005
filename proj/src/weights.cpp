#include "rfclust/weights.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "rfclust/common.hpp"

namespace rfclust {

WeightVector normalize_weights(std::span<const double> raw,
                               std::span<const std::size_t> feature_indices) {
  if (raw.empty()) throw ValidationError("normalize_weights: empty input");
  if (!feature_indices.empty() && feature_indices.size() != raw.size()) {
    throw ValidationError("normalize_weights: indices and weights differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i])) {
      throw ValidationError("normalize_weights: entry " + std::to_string(i) + " is not finite");
    }
    if (raw[i] < 0.0) {
      throw ValidationError("normalize_weights: entry " + std::to_string(i) + " is negative");
    }
    total += raw[i];
  }
  WeightVector out;
  if (feature_indices.empty()) {
    out.feature_indices.resize(raw.size());
    std::iota(out.feature_indices.begin(), out.feature_indices.end(), 0);
  } else {
    out.feature_indices.assign(feature_indices.begin(), feature_indices.end());
  }
  out.weights.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out.weights[i] = total > 0.0 ? raw[i] / total : 1.0 / static_cast<double>(raw.size());
  }
  return out;
}

WeightVector uniform_weights(std::span<const std::size_t> feature_indices) {
  const std::vector<double> zeros(feature_indices.size(), 0.0);
  return normalize_weights(zeros, feature_indices);
}

}  // namespace rfclust
