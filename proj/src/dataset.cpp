#include "rfclust/dataset.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "rfclust/common.hpp"
#include "rfclust/csv.hpp"

namespace rfclust {
namespace {

std::string cell_location(std::string_view source, const csv::Table& t, std::size_t row,
                          std::size_t col) {
  std::string where = std::string(source) + ": line " + std::to_string(t.line_numbers[row]);
  if (!t.rows[row].empty()) where += " (" + std::string(kProblemIdColumn) + "=" + t.rows[row][0] + ")";
  if (col < t.header.size()) where += ", column '" + t.header[col] + "'";
  return where;
}

void check_id_header(const csv::Table& t, std::string_view source) {
  if (t.header.empty() || t.header[0] != kProblemIdColumn) {
    throw ValidationError(std::string(source) + ": first column must be named '" +
                          std::string(kProblemIdColumn) + "'");
  }
  if (t.header.size() < 2) throw ValidationError(std::string(source) + ": no data columns");
  std::set<std::string> seen;
  for (const auto& name : t.header) {
    if (!seen.insert(name).second) {
      throw ValidationError(std::string(source) + ": duplicate column '" + name + "'");
    }
  }
}

// Numeric body of a keyed table; ids in file order.
struct NumericTable {
  std::vector<std::string> ids;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

NumericTable to_numeric(const csv::Table& t, std::string_view source) {
  check_id_header(t, source);
  NumericTable out;
  out.columns.assign(t.header.begin() + 1, t.header.end());
  std::set<std::string> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row.size() != t.header.size()) {
      throw ValidationError(std::string(source) + ": line " + std::to_string(t.line_numbers[r]) +
                            " has " + std::to_string(row.size()) + " fields, expected " +
                            std::to_string(t.header.size()));
    }
    if (row[0].empty()) {
      throw ValidationError(cell_location(source, t, r, 0) + ": empty problem id");
    }
    if (!seen.insert(row[0]).second) {
      throw ValidationError(cell_location(source, t, r, 0) + ": duplicate problem id '" + row[0] +
                            "'");
    }
    std::vector<double> values(row.size() - 1);
    for (std::size_t c = 1; c < row.size(); ++c) {
      auto v = csv::parse_double(row[c]);
      if (!v) {
        throw ValidationError(cell_location(source, t, r, c) + ": non-numeric value '" + row[c] +
                              "'");
      }
      if (std::isnan(*v)) throw ValidationError(cell_location(source, t, r, c) + ": NaN value");
      if (std::isinf(*v)) throw ValidationError(cell_location(source, t, r, c) + ": infinite value");
      values[c - 1] = *v;
    }
    out.ids.push_back(row[0]);
    out.rows.push_back(std::move(values));
  }
  return out;
}

Dataset assemble(const csv::Table& ft, const csv::Table& tt, std::string_view fsrc,
                 std::string_view tsrc, const LoadOptions& options) {
  NumericTable features = to_numeric(ft, fsrc);
  NumericTable targets = to_numeric(tt, tsrc);

  Dataset ds;
  ds.problem_ids = features.ids;
  ds.feature_names = features.columns;
  ds.features = Matrix(features.ids.size(), features.columns.size());
  for (std::size_t r = 0; r < features.rows.size(); ++r) {
    std::copy(features.rows[r].begin(), features.rows[r].end(), ds.features.row(r).begin());
  }

  std::unordered_map<std::string, std::size_t> target_row;
  for (std::size_t r = 0; r < targets.ids.size(); ++r) target_row.emplace(targets.ids[r], r);
  for (const auto& id : ds.problem_ids) {
    if (!target_row.contains(id)) {
      throw ValidationError(std::string(tsrc) + ": missing targets for problem id '" + id + "'");
    }
  }
  for (const auto& id : targets.ids) {
    if (std::find(ds.problem_ids.begin(), ds.problem_ids.end(), id) == ds.problem_ids.end()) {
      throw ValidationError(std::string(tsrc) + ": problem id '" + id +
                            "' has targets but no features");
    }
  }
  for (std::size_t c = 0; c < targets.columns.size(); ++c) {
    TargetColumn col{targets.columns[c], {}};
    col.values.reserve(ds.problem_ids.size());
    for (const auto& id : ds.problem_ids) col.values.push_back(targets.rows[target_row[id]][c]);
    if (options.raw_precision_floor) {
      try {
        col.values = log_transform_targets(col.values, options.raw_precision_floor);
      } catch (const ValidationError& e) {
        throw ValidationError(std::string(tsrc) + ", column '" + col.algorithm + "': " + e.what());
      }
    }
    ds.targets.push_back(std::move(col));
  }
  ds.validate();
  return ds;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

const std::vector<double>& Dataset::target(std::string_view algorithm) const {
  for (const auto& t : targets) {
    if (t.algorithm == algorithm) return t.values;
  }
  throw ValidationError("unknown algorithm '" + std::string(algorithm) + "'");
}

std::size_t Dataset::problem_index(std::string_view id) const {
  for (std::size_t i = 0; i < problem_ids.size(); ++i) {
    if (problem_ids[i] == id) return i;
  }
  throw ValidationError("unknown problem id '" + std::string(id) + "'");
}

void Dataset::validate() const {
  const std::size_t n = problem_ids.size();
  if (n < 2) throw ValidationError("need >= 2 problems for LOPO, got " + std::to_string(n));
  if (feature_names.empty()) throw ValidationError("dataset has no feature columns");
  if (features.rows() != n || features.cols() != feature_names.size()) {
    throw ValidationError("feature matrix shape does not match ids and feature names");
  }
  std::set<std::string_view> ids(problem_ids.begin(), problem_ids.end());
  if (ids.size() != n) throw ValidationError("problem ids are not unique");
  std::set<std::string_view> names(feature_names.begin(), feature_names.end());
  if (names.size() != feature_names.size()) throw ValidationError("feature names are not unique");
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < features.cols(); ++c) {
      if (!std::isfinite(features(r, c))) {
        throw ValidationError("non-finite feature at (" + problem_ids[r] + ", " +
                              feature_names[c] + ")");
      }
    }
  }
  if (targets.empty()) throw ValidationError("dataset has no target columns");
  for (const auto& t : targets) {
    if (t.values.size() != n) {
      throw ValidationError("target column '" + t.algorithm + "' has wrong length");
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (!std::isfinite(t.values[r])) {
        throw ValidationError("non-finite target at (" + problem_ids[r] + ", " + t.algorithm +
                              ")");
      }
    }
  }
}

Dataset parse_dataset(std::string_view features_csv, std::string_view targets_csv,
                      const LoadOptions& options) {
  return assemble(csv::parse(features_csv, "features"), csv::parse(targets_csv, "targets"),
                  "features", "targets", options);
}

Dataset load_dataset(const std::filesystem::path& features_path,
                     const std::filesystem::path& targets_path, const LoadOptions& options) {
  const std::string fsrc = features_path.filename().string();
  const std::string tsrc = targets_path.filename().string();
  return assemble(csv::parse(slurp(features_path), fsrc), csv::parse(slurp(targets_path), tsrc),
                  fsrc, tsrc, options);
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& features_path,
                   const std::filesystem::path& targets_path) {
  std::ofstream f(features_path, std::ios::binary);
  std::ofstream t(targets_path, std::ios::binary);
  if (!f) throw ComputeError("cannot write " + features_path.string());
  if (!t) throw ComputeError("cannot write " + targets_path.string());

  std::vector<std::string> header{std::string(kProblemIdColumn)};
  header.insert(header.end(), dataset.feature_names.begin(), dataset.feature_names.end());
  csv::write_row(f, header);
  for (std::size_t r = 0; r < dataset.n_problems(); ++r) {
    std::vector<std::string> row{dataset.problem_ids[r]};
    for (double v : dataset.features.row(r)) row.push_back(format_double(v));
    csv::write_row(f, row);
  }

  header.assign(1, std::string(kProblemIdColumn));
  for (const auto& col : dataset.targets) header.push_back(col.algorithm);
  csv::write_row(t, header);
  for (std::size_t r = 0; r < dataset.n_problems(); ++r) {
    std::vector<std::string> row{dataset.problem_ids[r]};
    for (const auto& col : dataset.targets) row.push_back(format_double(col.values[r]));
    csv::write_row(t, row);
  }
}

nlohmann::ordered_json dataset_to_json(const Dataset& dataset) {
  nlohmann::ordered_json j;
  j["problem_ids"] = dataset.problem_ids;
  j["feature_names"] = dataset.feature_names;
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < dataset.n_problems(); ++r) {
    auto row = dataset.features.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["features"] = std::move(rows);
  auto targets = nlohmann::ordered_json::object();
  for (const auto& col : dataset.targets) targets[col.algorithm] = col.values;
  j["targets"] = std::move(targets);
  return j;
}

Dataset dataset_from_json(const nlohmann::ordered_json& j) {
  Dataset ds;
  try {
    ds.problem_ids = j.at("problem_ids").get<std::vector<std::string>>();
    ds.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    const auto& rows = j.at("features");
    ds.features = Matrix(rows.size(), ds.feature_names.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      auto values = rows[r].get<std::vector<double>>();
      if (values.size() != ds.feature_names.size()) {
        throw ValidationError("features row " + std::to_string(r) + " has wrong length");
      }
      std::copy(values.begin(), values.end(), ds.features.row(r).begin());
    }
    for (const auto& [name, values] : j.at("targets").items()) {
      ds.targets.push_back({name, values.get<std::vector<double>>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed dataset JSON: ") + e.what());
  }
  ds.validate();
  return ds;
}

std::vector<double> log_transform_targets(std::span<const double> raw_precisions,
                                          std::optional<double> floor) {
  if (floor && !(*floor > 0.0)) throw ValidationError("precision floor must be > 0");
  std::vector<double> out;
  out.reserve(raw_precisions.size());
  for (std::size_t i = 0; i < raw_precisions.size(); ++i) {
    double x = raw_precisions[i];
    if (std::isnan(x)) throw ValidationError("precision entry " + std::to_string(i) + " is NaN");
    if (floor) {
      x = std::max(x, *floor);
    } else if (!(x > 0.0)) {
      throw ValidationError("precision entry " + std::to_string(i) +
                            " is not positive and no floor is configured");
    }
    out.push_back(std::log10(x));
  }
  return out;
}

std::vector<FoldSpec> lopo_folds(const Dataset& dataset) {
  const std::size_t n = dataset.n_problems();
  if (n < 2) throw ValidationError("need >= 2 problems for LOPO, got " + std::to_string(n));
  std::vector<FoldSpec> folds;
  folds.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    FoldSpec fold;
    fold.test_problem = dataset.problem_ids[t];
    fold.test_index = t;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == t) continue;
      fold.train_indices.push_back(i);
      fold.train_problems.push_back(dataset.problem_ids[i]);
    }
    folds.push_back(std::move(fold));
  }
  return folds;
}

std::vector<std::size_t> nonconstant_columns(const Matrix& x) {
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    for (std::size_t r = 1; r < x.rows(); ++r) {
      if (x(r, c) != x(0, c)) {
        keep.push_back(c);
        break;
      }
    }
  }
  return keep;
}

}  // namespace rfclust
