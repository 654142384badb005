#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfclust/matrix.hpp"

#include <json.hpp>

namespace rfclust {

inline constexpr std::string_view kProblemIdColumn = "f_id";
inline constexpr double kDefaultPrecisionFloor = 1e-12;

struct TargetColumn {
  std::string algorithm;
  std::vector<double> values;  // log10 median precision, one per problem

  friend bool operator==(const TargetColumn&, const TargetColumn&) = default;
};

// Problems × features plus per-algorithm performance targets. Immutable after
// validate(); share it read-only between fold workers.
struct Dataset {
  std::vector<std::string> problem_ids;
  std::vector<std::string> feature_names;
  Matrix features;  // problem_ids.size() × feature_names.size()
  std::vector<TargetColumn> targets;

  std::size_t n_problems() const { return problem_ids.size(); }
  std::size_t n_features() const { return feature_names.size(); }

  // Targets for one algorithm; throws ValidationError for unknown ids.
  const std::vector<double>& target(std::string_view algorithm) const;
  std::size_t problem_index(std::string_view id) const;

  // Throws ValidationError describing the first broken invariant.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct LoadOptions {
  // When set, target cells are raw median precisions and are converted with
  // log_transform_targets using this floor. Otherwise they are taken as
  // already log10-transformed.
  std::optional<double> raw_precision_floor;
};

Dataset load_dataset(const std::filesystem::path& features_path,
                     const std::filesystem::path& targets_path, const LoadOptions& options = {});
// Same as load_dataset, on in-memory CSV text.
Dataset parse_dataset(std::string_view features_csv, std::string_view targets_csv,
                      const LoadOptions& options = {});

void write_dataset(const Dataset& dataset, const std::filesystem::path& features_path,
                   const std::filesystem::path& targets_path);

nlohmann::ordered_json dataset_to_json(const Dataset& dataset);
Dataset dataset_from_json(const nlohmann::ordered_json& j);

// log10(max(x, floor)); without a floor every entry must be positive.
std::vector<double> log_transform_targets(std::span<const double> raw_precisions,
                                          std::optional<double> floor = std::nullopt);

struct FoldSpec {
  std::string test_problem;
  std::vector<std::string> train_problems;
  std::size_t test_index = 0;
  std::vector<std::size_t> train_indices;
};

// One fold per problem, in dataset order.
std::vector<FoldSpec> lopo_folds(const Dataset& dataset);

// Columns of X whose values are not all identical.
std::vector<std::size_t> nonconstant_columns(const Matrix& x);

}  // namespace rfclust
