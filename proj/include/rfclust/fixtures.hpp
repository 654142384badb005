#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfclust/dataset.hpp"

namespace rfclust {

// Planted-structure dataset generator. Cluster c gets a ±1 sign code over the
// relevant features (the binary digits of c), so every relevant feature
// separates at least one pair of clusters when n_clusters covers it; nuisance
// features are small noise; correlated copies are near-duplicates of the
// first relevant feature. Targets are a per-cluster base plus bounded noise;
// deceptive problems keep their cluster's features but get a target far from
// the cluster base.
struct FixtureSpec {
  int n_problems = 30;
  int p_relevant = 4;
  int p_nuisance = 12;
  int n_correlated_copies = 4;
  int n_clusters = 10;
  double target_spread = 0.5;  // width of the within-cluster target band
  double deceptive_fraction = 0.0;
  std::uint64_t seed = 7;
  std::string algorithm = "DE1";

  void validate() const;
};

enum class ColumnRole { relevant, correlated_copy, nuisance };

struct FixtureManifest {
  std::vector<int> cluster_labels;     // per problem
  std::vector<double> cluster_bases;   // per cluster
  std::vector<bool> deceptive;         // per problem
  std::vector<ColumnRole> column_roles;
  std::vector<int> copy_source;  // per column: source column for copies, else -1
};

struct Fixture {
  Dataset dataset;
  FixtureManifest manifest;
};

Fixture generate_fixture(const FixtureSpec& spec);

nlohmann::ordered_json fixture_spec_to_json(const FixtureSpec& spec);
nlohmann::ordered_json manifest_to_json(const Fixture& fixture, const FixtureSpec& spec);

// features.csv, targets.csv and manifest.json under out_dir.
void write_fixture(const Fixture& fixture, const FixtureSpec& spec,
                   const std::filesystem::path& out_dir);

}  // namespace rfclust
