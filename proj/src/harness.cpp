#include "rfclust/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <set>
#include <thread>

#include "rfclust/common.hpp"
#include "rfclust/rng.hpp"

namespace rfclust {
namespace {

std::vector<double> descending(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

std::vector<std::size_t> map_indices(std::span<const std::size_t> local,
                                     std::span<const std::size_t> to_dataset) {
  std::vector<std::size_t> out;
  out.reserve(local.size());
  for (std::size_t i : local) out.push_back(to_dataset[i]);
  return out;
}

std::string hash_json(const nlohmann::ordered_json& j) { return hex64(fnv1a64(j.dump())); }

nlohmann::ordered_json weights_json(const std::optional<ImportanceResult>& r) {
  if (!r) return nullptr;
  nlohmann::ordered_json j;
  j["feature_indices"] = r->weights.feature_indices;
  j["weights"] = r->weights.weights;
  j["raw"] = r->raw;
  return j;
}

nlohmann::ordered_json portfolio_indices_json(const FeaturePortfolio& p) {
  nlohmann::ordered_json j;
  j["kept"] = p.kept;
  j["discarded"] = p.discarded;
  auto groups = nlohmann::ordered_json::array();
  for (const auto& g : p.groups) {
    groups.push_back({{"members", g.members},
                      {"representative", g.representative},
                      {"member_oob_mae", g.member_oob_mae}});
  }
  j["groups"] = std::move(groups);
  return j;
}

}  // namespace

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::rf: return "rf";
    case Variant::rfclust: return "rfclust";
    case Variant::rfclust_unsup: return "rfclust_unsup";
    case Variant::rfclust_perm: return "rfclust_perm";
  }
  return "rf";
}

std::string_view variant_label(Variant v) {
  switch (v) {
    case Variant::rf: return "RF";
    case Variant::rfclust: return "RF + clust";
    case Variant::rfclust_unsup: return "RF + clust (unsup.)";
    case Variant::rfclust_perm: return "RF + clust (perm.)";
  }
  return "RF";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : kAllVariants) {
    if (variant_name(v) == name || variant_label(v) == name) return v;
  }
  throw ValidationError("unknown variant '" + std::string(name) +
                        "' (expected rf, rfclust, rfclust_unsup or rfclust_perm)");
}

bool RunConfig::has(Variant v) const {
  return std::find(variants.begin(), variants.end(), v) != variants.end();
}

void RunConfig::validate() const {
  if (variants.empty()) throw ValidationError("at least one variant is required");
  std::set<Variant> unique(variants.begin(), variants.end());
  if (unique.size() != variants.size()) throw ValidationError("duplicate variant");
  if (thresholds.empty()) throw ValidationError("at least one threshold is required");
  std::set<double> seen;
  for (double t : thresholds) {
    if (!(t > 0.0 && t <= 1.0)) {
      throw ValidationError("similarity thresholds must be in (0, 1], got " + format_double(t));
    }
    if (!seen.insert(t).second) throw ValidationError("duplicate threshold " + format_double(t));
  }
  if (!(correlation_threshold > 0.0 && correlation_threshold < 1.0)) {
    throw ValidationError("correlation threshold must be in (0, 1)");
  }
  if (min_group_size < 2) throw ValidationError("min_group_size must be >= 2");
  if (m_clusters < 2) throw ValidationError("m_clusters must be >= 2");
  if (n_repeats < 1) throw ValidationError("n_repeats must be >= 1");
  if (jobs < 1) throw ValidationError("jobs must be >= 1");
  forest.validate();
}

nlohmann::ordered_json run_config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["algorithm"] = c.algorithm;
  j["thresholds"] = c.thresholds;
  auto variants = nlohmann::ordered_json::array();
  for (Variant v : c.variants) variants.push_back(variant_name(v));
  j["variants"] = std::move(variants);
  j["correlation_threshold"] = c.correlation_threshold;
  j["correlation_mode"] = correlation_mode_name(c.correlation_mode);
  j["min_group_size"] = c.min_group_size;
  j["m_clusters"] = c.m_clusters;
  j["n_repeats"] = c.n_repeats;
  j["seed"] = c.seed;
  j["scaling"] = scaling_mode_name(c.scaling);
  auto forest = forest_params_to_json(c.forest);
  forest.erase("seed");
  j["forest"] = std::move(forest);
  return j;
}

FoldSeeds fold_seeds(std::uint64_t root, std::size_t test_index) {
  return {derive_seed(root, {test_index, 0}), derive_seed(root, {test_index, 1}),
          derive_seed(root, {test_index, 2})};
}

const FoldCell& FoldResult::cell(Variant v, double threshold) const {
  for (const auto& c : cells) {
    if (c.variant == v && c.threshold == threshold) return c;
  }
  throw ValidationError("no result for variant " + std::string(variant_name(v)) +
                        " at threshold " + format_double(threshold));
}

FoldResult run_fold(const Dataset& dataset, const FoldSpec& fold, const RunConfig& config) {
  const std::vector<double>& y_all = dataset.target(config.algorithm);
  const FoldSeeds seeds = fold_seeds(config.seed, fold.test_index);

  FoldResult out;
  out.test_problem = fold.test_problem;
  out.test_index = fold.test_index;
  out.truth = y_all[fold.test_index];

  // Everything learned below sees training rows only.
  const Matrix x_train_all = dataset.features.select_rows(fold.train_indices);
  std::vector<double> y_train;
  for (std::size_t i : fold.train_indices) y_train.push_back(y_all[i]);

  const std::vector<std::size_t> candidates = nonconstant_columns(x_train_all);
  {
    std::size_t next = 0;
    for (std::size_t c = 0; c < dataset.n_features(); ++c) {
      if (next < candidates.size() && candidates[next] == c) {
        ++next;
      } else {
        out.dropped_constant.push_back(c);
      }
    }
  }
  if (!out.dropped_constant.empty()) {
    std::string names;
    for (std::size_t c : out.dropped_constant) {
      names += (names.empty() ? "" : ", ") + dataset.feature_names[c];
    }
    warn("fold " + fold.test_problem + ": dropping zero-variance feature(s): " + names);
  }
  if (candidates.empty()) throw ComputeError("every feature is constant on the training problems");

  const Matrix x_candidates = x_train_all.select_columns(candidates);
  SelectionConfig selection;
  selection.correlation_threshold = config.correlation_threshold;
  selection.mode = config.correlation_mode;
  selection.min_group_size = config.min_group_size;
  selection.forest = config.forest;
  selection.forest.seed = seeds.selection;
  const FeaturePortfolio local = candidates.size() >= 2
                                     ? select_features(x_candidates, y_train, selection)
                                     : FeaturePortfolio{{0}, {}, {}};

  out.portfolio.kept = map_indices(local.kept, candidates);
  out.portfolio.discarded = map_indices(local.discarded, candidates);
  for (const auto& g : local.groups) {
    out.portfolio.groups.push_back(
        {map_indices(g.members, candidates), candidates[g.representative], g.member_oob_mae});
  }
  const std::vector<std::size_t>& columns = out.portfolio.kept;

  const Matrix x_train = x_train_all.select_columns(columns);
  ForestParams model_params = config.forest;
  model_params.seed = seeds.model;
  out.model = fit(x_train, y_train, model_params);

  std::vector<double> x_test;
  for (std::size_t c : columns) x_test.push_back(dataset.features(fold.test_index, c));
  out.rf_prediction = out.model.predict(x_test);

  const FeatureScaler scaler = FeatureScaler::fit(x_train, config.scaling);
  const Matrix x_train_scaled = scaler.transform(x_train);
  const std::vector<double> x_test_scaled = scaler.transform(x_test);

  if (config.has(Variant::rfclust_unsup)) {
    if (columns.size() < 2) {
      out.unsupervised = ImportanceResult{uniform_weights(columns), std::vector<double>(1, 0.0)};
    } else {
      out.unsupervised = unsupervised_importance(x_train_scaled, config.m_clusters);
      out.unsupervised->weights.feature_indices = columns;
    }
  }
  if (config.has(Variant::rfclust_perm)) {
    out.permutation =
        permutation_importance(out.model, x_train, y_train, config.n_repeats, seeds.permutation);
    out.permutation->weights.feature_indices = columns;
  }

  // Empty weights select the plain cosine.
  auto weights_for = [&](Variant v) -> std::span<const double> {
    switch (v) {
      case Variant::rfclust_unsup: return out.unsupervised->weights.weights;
      case Variant::rfclust_perm: return out.permutation->weights.weights;
      default: return {};
    }
  };

  std::map<std::string, double, std::less<>> y_by_id;
  for (std::size_t i = 0; i < fold.train_indices.size(); ++i) {
    y_by_id.emplace(fold.train_problems[i], y_train[i]);
  }

  for (Variant v : config.variants) {
    for (double threshold : config.thresholds) {
      FoldCell cell;
      cell.variant = v;
      cell.threshold = threshold;
      if (v == Variant::rf) {
        cell.prediction.rf_prediction = out.rf_prediction;
        cell.prediction.neighbors.threshold = threshold;
        cell.prediction.final_prediction = out.rf_prediction;
      } else {
        const NeighborSet neighbors = select_neighbors(
            x_test_scaled, x_train_scaled, fold.train_problems, threshold, weights_for(v));
        cell.prediction = calibrate(out.rf_prediction, neighbors, y_by_id);
      }
      cell.abs_error = std::fabs(cell.prediction.final_prediction - out.truth);
      out.cells.push_back(std::move(cell));
    }
  }

  const std::pair<const char*, const WeightVector*> methods[] = {
      {"plain", nullptr},
      {"unsup", out.unsupervised ? &out.unsupervised->weights : nullptr},
      {"perm", out.permutation ? &out.permutation->weights : nullptr}};
  for (auto [method, w] : methods) {
    if (std::string_view(method) != "plain" && w == nullptr) continue;
    for (std::size_t r = 0; r < x_train_scaled.rows(); ++r) {
      SimilarityPair pair;
      pair.train_problem = fold.train_problems[r];
      pair.method = method;
      pair.similarity = try_similarity(x_test_scaled, x_train_scaled.row(r),
                                       w ? std::span<const double>(w->weights)
                                         : std::span<const double>());
      pair.abs_performance_diff = std::fabs(y_train[r] - out.truth);
      out.similarity_pairs.push_back(std::move(pair));
    }
  }

  out.portfolio_hash = hash_json(portfolio_indices_json(out.portfolio));
  nlohmann::ordered_json weights;
  weights["unsup"] = weights_json(out.unsupervised);
  weights["perm"] = weights_json(out.permutation);
  out.weights_hash = hash_json(weights);
  out.model_hash = hash_json(forest_to_json(out.model));
  return out;
}

nlohmann::ordered_json fold_result_to_json(const FoldResult& fold, const Dataset& dataset,
                                           const RunConfig& config) {
  auto name = [&](std::size_t c) { return dataset.feature_names[c]; };
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["algorithm"] = config.algorithm;
  j["test_problem"] = fold.test_problem;
  j["truth"] = fold.truth;
  auto dropped = nlohmann::ordered_json::array();
  for (std::size_t c : fold.dropped_constant) dropped.push_back(name(c));
  j["dropped_constant_features"] = std::move(dropped);
  j["portfolio"] = portfolio_to_json(fold.portfolio, dataset.feature_names);

  auto weights = nlohmann::ordered_json::object();
  const std::pair<const char*, const std::optional<ImportanceResult>*> methods[] = {
      {"unsup", &fold.unsupervised}, {"perm", &fold.permutation}};
  for (auto [method, result] : methods) {
    if (!*result) continue;
    auto entries = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < (*result)->weights.size(); ++i) {
      entries.push_back({{"feature", name((*result)->weights.feature_indices[i])},
                         {"raw", (*result)->raw[i]},
                         {"weight", (*result)->weights.weights[i]}});
    }
    weights[method] = std::move(entries);
  }
  j["weights"] = std::move(weights);
  j["rf_prediction"] = fold.rf_prediction;

  auto cells = nlohmann::ordered_json::array();
  for (const auto& c : fold.cells) {
    nlohmann::ordered_json cj;
    cj["variant"] = variant_name(c.variant);
    cj["threshold"] = c.threshold;
    cj["k"] = c.k();
    auto neighbors = nlohmann::ordered_json::array();
    for (const auto& n : c.prediction.neighbors.entries) {
      neighbors.push_back({{"problem", n.problem_id},
                           {"similarity", n.similarity},
                           {"contribution", n.contribution}});
    }
    cj["neighbors"] = std::move(neighbors);
    cj["neighbor_mean"] = c.prediction.neighbor_mean;
    cj["final_prediction"] = c.prediction.final_prediction;
    cj["abs_error"] = c.abs_error;
    cells.push_back(std::move(cj));
  }
  j["cells"] = std::move(cells);
  j["artifact_hashes"] = {{"portfolio", fold.portfolio_hash},
                          {"weights", fold.weights_hash},
                          {"model", fold.model_hash}};
  return j;
}

std::vector<double> RunSummary::errors(Variant v, double threshold) const {
  std::vector<double> out;
  for (const auto& f : folds) out.push_back(f.cell(v, threshold).abs_error);
  return out;
}

std::vector<std::size_t> RunSummary::neighbor_counts(Variant v, double threshold) const {
  std::vector<std::size_t> out;
  for (const auto& f : folds) out.push_back(f.cell(v, threshold).k());
  return out;
}

std::vector<bool> RunSummary::equals_rf(Variant v, double threshold) const {
  std::vector<bool> out;
  for (const auto& f : folds) out.push_back(f.cell(v, threshold).k() == 0);
  return out;
}

double RunSummary::mae(Variant v, double threshold) const {
  const auto e = errors(v, threshold);
  double total = 0.0;
  for (double x : e) total += x;
  return total / static_cast<double>(e.size());
}

RunSummary run_lopo(const Dataset& dataset, const RunConfig& config) {
  config.validate();
  dataset.validate();
  dataset.target(config.algorithm);
  if (config.has(Variant::rfclust_unsup) &&
      dataset.n_problems() - 1 < static_cast<std::size_t>(config.m_clusters)) {
    throw ValidationError("m_clusters exceeds the number of training problems per fold");
  }

  const std::vector<FoldSpec> folds = lopo_folds(dataset);
  std::vector<FoldResult> results(folds.size());
  std::vector<std::exception_ptr> failures(folds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < folds.size(); i = next++) {
      try {
        results[i] = run_fold(dataset, folds[i], config);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(config.jobs), folds.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  for (std::size_t i = 0; i < folds.size(); ++i) {
    if (!failures[i]) continue;
    const std::string where = "fold " + folds[i].test_problem + ": ";
    try {
      std::rethrow_exception(failures[i]);
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    } catch (const std::exception& e) {
      throw ComputeError(where + e.what());
    }
  }

  RunSummary summary;
  summary.config = config;
  summary.problem_ids = dataset.problem_ids;
  summary.feature_names = dataset.feature_names;
  summary.folds = std::move(results);
  const std::vector<double> thresholds = descending(config.thresholds);
  for (Variant v : config.variants) {
    if (v == Variant::rf) {
      summary.cells.push_back({v, thresholds.front(), summary.mae(v, thresholds.front())});
      continue;
    }
    for (double t : thresholds) summary.cells.push_back({v, t, summary.mae(v, t)});
  }
  // rf first, as in the summary table layout.
  std::stable_partition(summary.cells.begin(), summary.cells.end(),
                        [](const SummaryCell& c) { return c.variant == Variant::rf; });
  return summary;
}

}  // namespace rfclust
