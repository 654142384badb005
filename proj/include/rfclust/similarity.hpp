#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rfclust/matrix.hpp"

namespace rfclust {

// Norms below this make a similarity undefined.
inline constexpr double kZeroNormTolerance = 1e-15;

double cosine(std::span<const double> u, std::span<const double> v);

// Σ w²uv / (‖w∘u‖ ‖w∘v‖), computed as cosine(w∘u, w∘v).
double weighted_cosine(std::span<const double> u, std::span<const double> v,
                       std::span<const double> w);

// Like weighted_cosine (or cosine when w is empty) but returns nullopt
// instead of throwing when either vector has zero (weighted) norm.
std::optional<double> try_similarity(std::span<const double> u, std::span<const double> v,
                                     std::span<const double> w);

struct Neighbor {
  std::string problem_id;
  std::size_t train_position = 0;  // row in the training matrix
  double similarity = 0.0;
  double contribution = 0.0;  // similarity / Σ similarity

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct NeighborSet {
  double threshold = 0.0;
  std::vector<Neighbor> entries;  // descending similarity, ties by train position

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  friend bool operator==(const NeighborSet&, const NeighborSet&) = default;
};

// Every training problem with similarity >= threshold. Pairs whose
// similarity is undefined (zero weighted norm) are skipped with a warning.
NeighborSet select_neighbors(std::span<const double> x_test, const Matrix& x_train,
                             std::span<const std::string> train_ids, double threshold,
                             std::span<const double> weights = {});

struct CalibratedPrediction {
  double rf_prediction = 0.0;
  NeighborSet neighbors;
  double neighbor_mean = 0.0;  // Σ contribution·y; 0 when there are no neighbors
  double final_prediction = 0.0;

  friend bool operator==(const CalibratedPrediction&, const CalibratedPrediction&) = default;
};

// (rf + Σ w_i y_i) / 2, or rf alone when the neighbor set is empty.
CalibratedPrediction calibrate(double rf_prediction, const NeighborSet& neighbors,
                               const std::map<std::string, double, std::less<>>& y_train);

enum class ScalingMode { none, minmax, zscore };

std::string_view scaling_mode_name(ScalingMode mode);
ScalingMode parse_scaling_mode(std::string_view name);

// Per-column affine map fit on training rows only.
class FeatureScaler {
 public:
  FeatureScaler() = default;
  static FeatureScaler fit(const Matrix& x_train, ScalingMode mode);

  std::vector<double> transform(std::span<const double> row) const;
  Matrix transform(const Matrix& x) const;
  ScalingMode mode() const { return mode_; }

 private:
  ScalingMode mode_ = ScalingMode::none;
  std::vector<double> offset_;
  std::vector<double> scale_;  // multiplier; 0 for constant columns
};

}  // namespace rfclust
