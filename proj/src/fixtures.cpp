#include "rfclust/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "rfclust/common.hpp"
#include "rfclust/rng.hpp"

namespace rfclust {
namespace {

constexpr double kFeatureNoise = 0.05;
constexpr double kDeceptiveOffset = 8.0;
constexpr double kBaseLow = -8.0;
constexpr double kBaseHigh = 0.0;

std::string_view role_name(ColumnRole r) {
  switch (r) {
    case ColumnRole::relevant: return "relevant";
    case ColumnRole::correlated_copy: return "correlated_copy";
    case ColumnRole::nuisance: return "nuisance";
  }
  return "nuisance";
}

}  // namespace

void FixtureSpec::validate() const {
  if (n_problems < 2) throw ValidationError("fixture: n_problems must be >= 2");
  if (p_relevant < 0 || p_nuisance < 0 || n_correlated_copies < 0) {
    throw ValidationError("fixture: feature counts must be >= 0");
  }
  if (p_relevant + p_nuisance + n_correlated_copies < 1) {
    throw ValidationError("fixture: need at least one feature");
  }
  if (n_clusters < 1 || n_clusters > n_problems) {
    throw ValidationError("fixture: n_clusters must be in [1, n_problems]");
  }
  if (n_clusters > 1 && (p_relevant == 0 || (p_relevant < 31 && (1 << p_relevant) < n_clusters))) {
    throw ValidationError("fixture: 2^p_relevant must be >= n_clusters");
  }
  if (n_correlated_copies > 0 && p_relevant == 0) {
    throw ValidationError("fixture: correlated copies need a relevant feature to copy");
  }
  if (!(deceptive_fraction >= 0.0 && deceptive_fraction <= 1.0)) {
    throw ValidationError("fixture: deceptive_fraction must be in [0, 1]");
  }
  if (!(target_spread >= 0.0) || !std::isfinite(target_spread)) {
    throw ValidationError("fixture: target_spread must be >= 0");
  }
  if (algorithm.empty()) throw ValidationError("fixture: algorithm id must not be empty");
}

Fixture generate_fixture(const FixtureSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const auto n = static_cast<std::size_t>(spec.n_problems);
  const auto k = static_cast<std::size_t>(spec.n_clusters);

  Fixture fx;
  FixtureManifest& mf = fx.manifest;
  Dataset& ds = fx.dataset;

  for (int j = 0; j < spec.p_relevant; ++j) {
    ds.feature_names.push_back("rel_" + std::to_string(j));
    mf.column_roles.push_back(ColumnRole::relevant);
    mf.copy_source.push_back(-1);
  }
  for (int j = 0; j < spec.n_correlated_copies; ++j) {
    ds.feature_names.push_back("copy_" + std::to_string(j) + "_of_rel_0");
    mf.column_roles.push_back(ColumnRole::correlated_copy);
    mf.copy_source.push_back(0);
  }
  for (int j = 0; j < spec.p_nuisance; ++j) {
    ds.feature_names.push_back("nuis_" + std::to_string(j));
    mf.column_roles.push_back(ColumnRole::nuisance);
    mf.copy_source.push_back(-1);
  }

  for (std::size_t i = 0; i < n; ++i) {
    ds.problem_ids.push_back(std::to_string(i + 1));
    mf.cluster_labels.push_back(static_cast<int>(i % k));
  }

  for (std::size_t c = 0; c < k; ++c) mf.cluster_bases.push_back(rng.uniform(kBaseLow, kBaseHigh));

  // At most one deceptive problem per cluster until every cluster has one.
  const auto n_deceptive =
      static_cast<std::size_t>(std::lround(spec.deceptive_fraction * static_cast<double>(n)));
  mf.deceptive.assign(n, false);
  {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<std::size_t>(order));
    // Rank of each problem within its cluster in shuffled order.
    std::vector<std::size_t> rank(n, 0);
    std::vector<std::size_t> seen(k, 0);
    for (std::size_t q : order) rank[q] = seen[static_cast<std::size_t>(mf.cluster_labels[q])]++;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rank[a] < rank[b]; });
    for (std::size_t i = 0; i < n_deceptive; ++i) mf.deceptive[order[i]] = true;
  }

  const std::size_t p = ds.feature_names.size();
  ds.features = Matrix(n, p);
  std::vector<double> y(n);
  const double mid = (kBaseLow + kBaseHigh) / 2.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(mf.cluster_labels[i]);
    std::size_t col = 0;
    for (int j = 0; j < spec.p_relevant; ++j, ++col) {
      const double sign = (c >> j) & 1U ? 1.0 : -1.0;
      ds.features(i, col) = sign + kFeatureNoise * rng.normal();
    }
    for (int j = 0; j < spec.n_correlated_copies; ++j, ++col) {
      ds.features(i, col) = ds.features(i, 0) + kFeatureNoise * rng.normal();
    }
    for (int j = 0; j < spec.p_nuisance; ++j, ++col) {
      ds.features(i, col) = kFeatureNoise * rng.normal();
    }
    const double base = mf.cluster_bases[c];
    y[i] = base + rng.uniform(-spec.target_spread / 2.0, spec.target_spread / 2.0);
    if (mf.deceptive[i]) y[i] = base + (base < mid ? kDeceptiveOffset : -kDeceptiveOffset);
  }
  ds.targets.push_back({spec.algorithm, std::move(y)});
  ds.validate();
  return fx;
}

nlohmann::ordered_json fixture_spec_to_json(const FixtureSpec& spec) {
  nlohmann::ordered_json j;
  j["n_problems"] = spec.n_problems;
  j["p_relevant"] = spec.p_relevant;
  j["p_nuisance"] = spec.p_nuisance;
  j["n_correlated_copies"] = spec.n_correlated_copies;
  j["n_clusters"] = spec.n_clusters;
  j["target_spread"] = spec.target_spread;
  j["deceptive_fraction"] = spec.deceptive_fraction;
  j["seed"] = spec.seed;
  j["algorithm"] = spec.algorithm;
  return j;
}

nlohmann::ordered_json manifest_to_json(const Fixture& fx, const FixtureSpec& spec) {
  const auto& mf = fx.manifest;
  const auto& ds = fx.dataset;
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["spec"] = fixture_spec_to_json(spec);
  auto problems = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < ds.n_problems(); ++i) {
    problems.push_back({{"f_id", ds.problem_ids[i]},
                        {"cluster", mf.cluster_labels[i]},
                        {"deceptive", static_cast<bool>(mf.deceptive[i])}});
  }
  j["problems"] = std::move(problems);
  j["cluster_bases"] = mf.cluster_bases;
  auto columns = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < ds.n_features(); ++c) {
    nlohmann::ordered_json col{{"name", ds.feature_names[c]}, {"role", role_name(mf.column_roles[c])}};
    if (mf.copy_source[c] >= 0) {
      col["copy_of"] = ds.feature_names[static_cast<std::size_t>(mf.copy_source[c])];
    }
    columns.push_back(std::move(col));
  }
  j["columns"] = std::move(columns);
  return j;
}

void write_fixture(const Fixture& fixture, const FixtureSpec& spec,
                   const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw ComputeError("cannot create " + out_dir.string() + ": " + ec.message());
  write_dataset(fixture.dataset, out_dir / "features.csv", out_dir / "targets.csv");
  std::ofstream m(out_dir / "manifest.json", std::ios::binary);
  if (!m) throw ComputeError("cannot write manifest.json");
  m << manifest_to_json(fixture, spec).dump(2) << '\n';
}

}  // namespace rfclust
