#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rfclust/dataset.hpp"
#include "rfclust/feature_selection.hpp"
#include "rfclust/forest.hpp"
#include "rfclust/importance.hpp"
#include "rfclust/similarity.hpp"

namespace rfclust {

enum class Variant { rf, rfclust, rfclust_unsup, rfclust_perm };

inline constexpr Variant kAllVariants[] = {Variant::rf, Variant::rfclust, Variant::rfclust_unsup,
                                           Variant::rfclust_perm};

std::string_view variant_name(Variant v);   // rf, rfclust, ...
std::string_view variant_label(Variant v);  // "RF", "RF + clust (unsup.)", ...
Variant parse_variant(std::string_view name);

struct RunConfig {
  std::string algorithm;
  std::vector<double> thresholds{0.5, 0.7, 0.9};
  std::vector<Variant> variants{std::begin(kAllVariants), std::end(kAllVariants)};
  double correlation_threshold = 0.9;
  CorrelationMode correlation_mode = CorrelationMode::absolute;
  std::size_t min_group_size = 2;
  int m_clusters = 4;
  int n_repeats = 15;
  std::uint64_t seed = 1;
  ScalingMode scaling = ScalingMode::none;
  ForestParams forest;  // its seed is replaced by fold-derived seeds
  int jobs = 1;

  bool has(Variant v) const;
  void validate() const;
};

nlohmann::ordered_json run_config_to_json(const RunConfig& config);

// Seeds used inside one fold, all derived from the run seed and the index of
// the held-out problem.
struct FoldSeeds {
  std::uint64_t model = 0;
  std::uint64_t selection = 0;
  std::uint64_t permutation = 0;
};
FoldSeeds fold_seeds(std::uint64_t root, std::size_t test_index);

struct FoldCell {
  Variant variant = Variant::rf;
  double threshold = 0.0;
  CalibratedPrediction prediction;
  double abs_error = 0.0;

  std::size_t k() const { return prediction.neighbors.size(); }
};

struct SimilarityPair {
  std::string train_problem;
  std::string method;  // plain | unsup | perm
  std::optional<double> similarity;
  double abs_performance_diff = 0.0;
};

struct FoldResult {
  std::string test_problem;
  std::size_t test_index = 0;
  double truth = 0.0;
  std::vector<std::size_t> dropped_constant;  // dataset columns
  // Portfolio in dataset column indices (groups and representatives too).
  FeaturePortfolio portfolio;
  std::optional<ImportanceResult> unsupervised;  // feature_indices = dataset columns
  std::optional<ImportanceResult> permutation;
  Forest model;
  double rf_prediction = 0.0;
  std::vector<FoldCell> cells;  // per (variant, threshold), config order
  std::vector<SimilarityPair> similarity_pairs;

  // Fingerprints of the training-only artifacts.
  std::string portfolio_hash;
  std::string weights_hash;
  std::string model_hash;

  const FoldCell& cell(Variant v, double threshold) const;
};

FoldResult run_fold(const Dataset& dataset, const FoldSpec& fold, const RunConfig& config);

nlohmann::ordered_json fold_result_to_json(const FoldResult& fold, const Dataset& dataset,
                                           const RunConfig& config);

struct SummaryCell {
  Variant variant = Variant::rf;
  double threshold = 0.0;  // unused for rf
  double mae = 0.0;
};

struct RunSummary {
  RunConfig config;
  std::vector<std::string> problem_ids;
  std::vector<std::string> feature_names;
  std::vector<FoldResult> folds;  // dataset order
  std::vector<SummaryCell> cells;  // rf once, then variant × descending threshold

  // Per-problem absolute errors for one (variant, threshold), dataset order.
  std::vector<double> errors(Variant v, double threshold) const;
  std::vector<std::size_t> neighbor_counts(Variant v, double threshold) const;
  // True where the calibrated prediction equals the RF prediction (k = 0).
  std::vector<bool> equals_rf(Variant v, double threshold) const;
  double mae(Variant v, double threshold) const;
};

RunSummary run_lopo(const Dataset& dataset, const RunConfig& config);

}  // namespace rfclust
