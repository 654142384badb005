#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "rfclust/clustering.hpp"
#include "rfclust/common.hpp"
#include "test_helpers.hpp"

using namespace rfclust;

namespace {

Matrix line_distances(const std::vector<double>& pts) {
  Matrix d(pts.size(), pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts.size(); ++j) d(i, j) = std::fabs(pts[i] - pts[j]);
  return d;
}

// UPGMA recomputed from member lists at every step.
std::vector<std::pair<std::set<std::size_t>, double>> naive_upgma(const Matrix& d) {
  std::vector<std::set<std::size_t>> clusters;
  for (std::size_t i = 0; i < d.rows(); ++i) clusters.push_back({i});
  std::vector<std::pair<std::set<std::size_t>, double>> out;
  while (clusters.size() > 1) {
    double best = 1e300;
    std::size_t bi = 0, bj = 1;
    for (std::size_t i = 0; i < clusters.size(); ++i)
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        double s = 0;
        for (auto a : clusters[i])
          for (auto b : clusters[j]) s += d(a, b);
        s /= static_cast<double>(clusters[i].size() * clusters[j].size());
        if (s < best) best = s, bi = i, bj = j;
      }
    std::set<std::size_t> merged = clusters[bi];
    merged.insert(clusters[bj].begin(), clusters[bj].end());
    out.emplace_back(merged, best);
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
    clusters[bi] = merged;
  }
  return out;
}

std::size_t brute_disagreement(const ClusterAssignment& a, const ClusterAssignment& b) {
  const int m = std::max(a.m, b.m);
  std::vector<int> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = 0;
  do {
    std::size_t agree = 0;
    for (std::size_t i = 0; i < a.labels.size(); ++i)
      if (perm[static_cast<std::size_t>(a.labels[i])] == b.labels[i]) ++agree;
    best = std::max(best, agree);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return a.labels.size() - best;
}

}  // namespace

TEST_CASE("average linkage on 0, 1, 3, 7 matches the reference dendrogram") {
  const Dendrogram dg = agglomerate(line_distances({0, 1, 3, 7}));
  REQUIRE(dg.merges.size() == 3);
  CHECK(dg.merges[0].a == 0);
  CHECK(dg.merges[0].b == 1);
  CHECK(dg.merges[0].distance == 1.0);
  CHECK(dg.merges[0].size == 2);
  CHECK(dg.merges[1].a == 2);
  CHECK(dg.merges[1].b == 4);
  CHECK(dg.merges[1].distance == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(dg.merges[1].size == 3);
  CHECK(dg.merges[2].a == 3);
  CHECK(dg.merges[2].b == 5);
  CHECK(dg.merges[2].distance == doctest::Approx(17.0 / 3.0).epsilon(1e-15));
  CHECK(dg.merges[2].size == 4);
}

TEST_CASE("three collinear points") {
  const Dendrogram dg = agglomerate(line_distances({0, 1, 3}));
  REQUIRE(dg.merges.size() == 2);
  CHECK(dg.merges[0].distance == 1.0);
  CHECK(dg.merges[1].a == 2);
  CHECK(dg.merges[1].b == 3);
  CHECK(dg.merges[1].distance == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(cut(dg, 2).labels == std::vector<int>{0, 0, 1});
  CHECK(cut(dg, 3).labels == std::vector<int>{0, 1, 2});
  CHECK(cut(dg, 1).labels == std::vector<int>{0, 0, 0});
}

TEST_CASE("Lance-Williams agglomeration matches naive UPGMA") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(12);
    const Matrix x = rfclust::testing::random_matrix(rng, n, 3, 0.1, 1.0);
    const Matrix d = cosine_distance_matrix(x);
    const Dendrogram dg = agglomerate(d);
    const auto oracle = naive_upgma(d);
    std::vector<std::set<std::size_t>> members;
    for (std::size_t i = 0; i < n; ++i) members.push_back({i});
    REQUIRE(dg.merges.size() == n - 1);
    for (std::size_t k = 0; k < dg.merges.size(); ++k) {
      std::set<std::size_t> merged = members[dg.merges[k].a];
      merged.insert(members[dg.merges[k].b].begin(), members[dg.merges[k].b].end());
      members.push_back(merged);
      CHECK(merged == oracle[k].first);
      CHECK(std::fabs(dg.merges[k].distance - oracle[k].second) <= 1e-12);
      CHECK(dg.merges[k].size == merged.size());
    }
  }
}

TEST_CASE("silhouette hand value") {
  const Matrix d = line_distances({0, 1, 10, 11});
  const ClusterAssignment a{{0, 0, 1, 1}, 2};
  // Outer points see the other cluster at mean 10.5, inner points at 9.5.
  CHECK(silhouette(d, a) ==
        doctest::Approx(1.0 - (1.0 / 10.5 + 1.0 / 9.5) / 2.0).epsilon(1e-14));
  // Singletons {0} and {1} score 0.
  const ClusterAssignment s{{0, 1, 2, 2}, 3};
  const double s2 = 1.0 - 1.0 / 9.0;   // b(2) = min(10, 9)
  const double s3 = 1.0 - 1.0 / 10.0;  // b(3) = min(11, 10)
  CHECK(silhouette(d, s) == doctest::Approx((s2 + s3) / 4.0).epsilon(1e-14));
}

TEST_CASE("disagreement_count matches brute-force label matching") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 1 + static_cast<int>(rng.below(5));
    const std::size_t n = static_cast<std::size_t>(m) + rng.below(12);
    ClusterAssignment a{{}, m}, b{{}, m};
    for (std::size_t i = 0; i < n; ++i) {
      a.labels.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(m))));
      b.labels.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(m))));
    }
    CHECK(disagreement_count(a, b) == brute_disagreement(a, b));
    CHECK(disagreement_count(a, a) == 0);
  }
}

TEST_CASE("cosine distance rejects zero rows and is symmetric") {
  Matrix x(2, 2);
  x(0, 0) = 1;
  CHECK_THROWS_AS(cosine_distance_matrix(x), ValidationError);
  Rng rng(3);
  const Matrix y = rfclust::testing::random_matrix(rng, 6, 4);
  const Matrix d = cosine_distance_matrix(y);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(d(i, i) == 0.0);
    for (std::size_t j = 0; j < 6; ++j) CHECK(d(i, j) == d(j, i));
  }
}

TEST_CASE("cluster_count_curve spans the requested range") {
  Rng rng(12);
  const Matrix x = rfclust::testing::random_matrix(rng, 8, 3, 0.1, 1);
  const auto curve = cluster_count_curve(x, 2, 10);
  REQUIRE(curve.size() == 6);
  CHECK(curve.front().m == 2);
  CHECK(curve.back().m == 7);
}

TEST_CASE("cut labels do not depend on row order") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 4 + rng.below(12);
    const Matrix x = rfclust::testing::random_matrix(rng, n, 3, 0.05, 1.0);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<std::size_t>(perm));
    const int m = 2 + static_cast<int>(rng.below(3));
    const auto a = cluster_rows(x, m);
    const auto b = cluster_rows(x.select_rows(perm), m);
    ClusterAssignment b_back{std::vector<int>(n), m};
    for (std::size_t i = 0; i < n; ++i) b_back.labels[perm[i]] = b.labels[i];
    CHECK(disagreement_count(a, b_back) == 0);
  }
}

TEST_CASE("disagreement_count is symmetric") {
  Rng rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 2 + static_cast<int>(rng.below(4));
    ClusterAssignment a{{}, m}, b{{}, m};
    for (int i = 0; i < 15; ++i) {
      a.labels.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(m))));
      b.labels.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(m))));
    }
    CHECK(disagreement_count(a, b) == disagreement_count(b, a));
  }
}

TEST_CASE("silhouette is invariant to uniform scaling of distances") {
  Rng rng(23);
  const Matrix x = rfclust::testing::random_matrix(rng, 12, 3, 0.05, 1.0);
  const Matrix d = cosine_distance_matrix(x);
  Matrix d7 = d;
  for (std::size_t i = 0; i < 12; ++i)
    for (double& v : d7.row(i)) v *= 7.0;
  const auto a = cut(agglomerate(d), 3);
  CHECK(cut(agglomerate(d7), 3) == a);
  CHECK(silhouette(d7, a) == doctest::Approx(silhouette(d, a)).epsilon(1e-12));
}
