#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "rfclust/matrix.hpp"

namespace rfclust {

// Defaults follow the common scikit-learn regressor defaults.
struct ForestParams {
  int n_trees = 100;
  std::optional<int> max_depth;  // unlimited when empty
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  double max_features = 1.0;  // fraction of features tried at each split
  bool bootstrap = true;
  std::uint64_t seed = 1;

  void validate() const;
  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf mean

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// Binary regression tree; samples with x[feature] <= threshold go left.
struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
  // Features referenced by at least one split.
  std::vector<int> used_features() const;
  friend bool operator==(const Tree&, const Tree&) = default;
};

struct Forest {
  std::vector<Tree> trees;
  // Per tree, the training rows (original order) left out of its bootstrap.
  std::vector<std::vector<std::size_t>> oob_rows;
  ForestParams params;
  std::size_t feature_count = 0;
  std::size_t training_rows = 0;

  double predict(std::span<const double> x) const;
  std::vector<double> predict(const Matrix& x) const;
  friend bool operator==(const Forest&, const Forest&) = default;
};

// Bagged CART regression. Deterministic in (X, y, params.seed), and invariant
// to the order of training rows: rows are put in a canonical order before the
// bootstrap draws.
Forest fit(const Matrix& x, std::span<const double> y, const ForestParams& params);

// Out-of-bag mean absolute error over the training set the forest was fit on.
// Rows that are in-bag for every tree are skipped with a warning.
double oob_mae(const Forest& forest, const Matrix& x, std::span<const double> y);

double mae(std::span<const double> predictions, std::span<const double> truth);

nlohmann::ordered_json forest_to_json(const Forest& forest);
Forest forest_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json forest_params_to_json(const ForestParams& params);
ForestParams forest_params_from_json(const nlohmann::ordered_json& j);

}  // namespace rfclust
