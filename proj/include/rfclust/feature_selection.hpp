#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rfclust/forest.hpp"
#include "rfclust/matrix.hpp"

namespace rfclust {

// Sample Pearson correlation. Throws ValidationError for constant input.
double pearson(std::span<const double> u, std::span<const double> v);

enum class CorrelationMode { absolute, signed_ };

std::string_view correlation_mode_name(CorrelationMode mode);
CorrelationMode parse_correlation_mode(std::string_view name);

// Simple undirected graph over feature indices 0..n_nodes-1.
struct CorrelationGraph {
  std::size_t n_nodes = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // i < j, sorted

  std::vector<std::vector<std::size_t>> adjacency() const;
};

// Edge (i, j) iff |r_ij| > threshold (absolute mode) or r_ij > threshold.
CorrelationGraph build_correlation_graph(const Matrix& x_train, double threshold,
                                         CorrelationMode mode = CorrelationMode::absolute);

// All maximal cliques with at least min_group_size members, each sorted
// ascending; ordered by smallest member, then size, then lexicographically.
std::vector<std::vector<std::size_t>> correlated_groups(const CorrelationGraph& graph,
                                                        std::size_t min_group_size = 2);

struct FeatureGroup {
  std::vector<std::size_t> members;
  std::size_t representative = 0;
  std::vector<double> member_oob_mae;  // aligned with members
};

struct FeaturePortfolio {
  std::vector<std::size_t> kept;       // ascending column indices
  std::vector<std::size_t> discarded;  // ascending column indices
  std::vector<FeatureGroup> groups;
};

// Per group, fits a forest on each member column alone and keeps the member
// with the lowest out-of-bag MAE (ties: lowest index). Features outside every
// group are kept; a feature in several groups is kept if it represents any.
FeaturePortfolio select_representatives(const std::vector<std::vector<std::size_t>>& groups,
                                        const Matrix& x_train, std::span<const double> y_train,
                                        const ForestParams& params);

struct SelectionConfig {
  double correlation_threshold = 0.9;
  CorrelationMode mode = CorrelationMode::absolute;
  std::size_t min_group_size = 2;
  ForestParams forest;
};

// Graph, groups and representatives in one call. Column indices refer to
// x_train's columns.
FeaturePortfolio select_features(const Matrix& x_train, std::span<const double> y_train,
                                 const SelectionConfig& config);

nlohmann::ordered_json portfolio_to_json(const FeaturePortfolio& portfolio,
                                         std::span<const std::string> feature_names);

}  // namespace rfclust
