#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "rfclust/common.hpp"
#include "rfclust/forest.hpp"
#include "test_helpers.hpp"

using namespace rfclust;
using rfclust::testing::random_matrix;
using rfclust::testing::random_vector;

namespace {

Tree leaf(double value) {
  Tree t;
  t.nodes.push_back(TreeNode{-1, 0.0, -1, -1, value});
  return t;
}

Tree stump(int feature, double threshold, double left, double right) {
  Tree t;
  t.nodes.push_back(TreeNode{feature, threshold, 1, 2, 0.0});
  t.nodes.push_back(TreeNode{-1, 0.0, -1, -1, left});
  t.nodes.push_back(TreeNode{-1, 0.0, -1, -1, right});
  return t;
}

ForestParams small_params(std::uint64_t seed = 3) {
  ForestParams p;
  p.n_trees = 25;
  p.seed = seed;
  return p;
}

}  // namespace

TEST_CASE("oob_mae on a hand-built three-row forest") {
  // Row 0 is OOB for trees A and B (preds 2 and 0, mean 1, error 1); row 1
  // for tree C (pred 4, error 3); row 2 for tree B (pred 3, error 2).
  Matrix x(3, 1);
  x(0, 0) = 0;
  x(1, 0) = 1;
  x(2, 0) = 2;
  const std::vector<double> y{0, 1, 5};
  Forest f;
  f.trees = {leaf(2), stump(0, 0.5, 0, 3), leaf(4)};
  f.oob_rows = {{0}, {0, 2}, {1}};
  f.feature_count = 1;
  f.training_rows = 3;
  CHECK(oob_mae(f, x, y) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("oob_mae refuses forests without bootstrap") {
  Rng rng(1);
  const Matrix x = random_matrix(rng, 10, 2);
  const auto y = random_vector(rng, 10);
  ForestParams p = small_params();
  p.bootstrap = false;
  const Forest f = fit(x, y, p);
  CHECK_THROWS_AS(oob_mae(f, x, y), ValidationError);
}

TEST_CASE("mae matches a compensated-summation oracle") {
  Rng rng(9);
  for (std::size_t n : {1U, 2U, 7U, 100U, 1001U}) {
    const auto a = random_vector(rng, n, -1e3, 1e3);
    const auto b = random_vector(rng, n, -1e3, 1e3);
    long double sum = 0, comp = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const long double term = std::fabs(a[i] - b[i]) - comp;
      const long double t = sum + term;
      comp = (t - sum) - term;
      sum = t;
    }
    const double oracle = static_cast<double>(sum / n);
    CHECK(std::fabs(mae(a, b) - oracle) <= 1e-12 * (1 + oracle));
  }
  CHECK_THROWS(mae(std::vector<double>{}, std::vector<double>{}));
}

TEST_CASE("pure leaves store the exact target value") {
  Rng rng(4);
  const Matrix x = random_matrix(rng, 12, 3);
  const std::vector<double> y(12, -3.7);
  const Forest f = fit(x, y, small_params());
  for (const Tree& t : f.trees) {
    REQUIRE(t.nodes.size() == 1);
    CHECK(t.nodes[0].value == -3.7);
  }
  for (std::size_t r = 0; r < x.rows(); ++r)
    CHECK(f.predict(x.row(r)) == doctest::Approx(-3.7).epsilon(1e-15));
}

TEST_CASE("a single deep tree without bootstrap interpolates distinct training rows") {
  Rng rng(5);
  const Matrix x = random_matrix(rng, 20, 2);
  const auto y = random_vector(rng, 20);
  ForestParams p = small_params();
  p.n_trees = 1;
  p.bootstrap = false;
  const Forest f = fit(x, y, p);
  for (std::size_t r = 0; r < x.rows(); ++r) CHECK(f.predict(x.row(r)) == y[r]);
}

TEST_CASE("max_depth and min_samples_leaf are honoured") {
  Rng rng(6);
  const Matrix x = random_matrix(rng, 40, 3);
  const auto y = random_vector(rng, 40);
  ForestParams p = small_params();
  p.max_depth = 1;
  for (const Tree& t : fit(x, y, p).trees) CHECK(t.nodes.size() <= 3);
  ForestParams q = small_params();
  q.bootstrap = false;
  q.n_trees = 1;
  q.min_samples_leaf = 40;
  CHECK(fit(x, y, q).trees[0].nodes.size() == 1);
}

TEST_CASE("fit is deterministic in the seed and invariant to row order") {
  Rng rng(7);
  const Matrix x = random_matrix(rng, 25, 4);
  const auto y = random_vector(rng, 25);
  const Forest a = fit(x, y, small_params(11));
  const Forest b = fit(x, y, small_params(11));
  CHECK(a == b);
  CHECK_FALSE(a == fit(x, y, small_params(12)));

  std::vector<std::size_t> perm(25);
  std::iota(perm.begin(), perm.end(), 0);
  Rng shuffler(8);
  shuffler.shuffle(std::span<std::size_t>(perm));
  const Matrix xp = x.select_rows(perm);
  std::vector<double> yp;
  for (auto i : perm) yp.push_back(y[i]);
  const Forest c = fit(xp, yp, small_params(11));
  CHECK(c.trees == a.trees);
  const Matrix probe = random_matrix(rng, 10, 4);
  CHECK(a.predict(probe) == c.predict(probe));
  CHECK(oob_mae(a, x, y) == doctest::Approx(oob_mae(c, xp, yp)).epsilon(1e-14));
}

TEST_CASE("forest JSON round-trip") {
  Rng rng(10);
  const Matrix x = random_matrix(rng, 15, 3);
  const auto y = random_vector(rng, 15);
  ForestParams p = small_params();
  p.max_depth = 4;
  p.max_features = 0.5;
  const Forest f = fit(x, y, p);
  CHECK(forest_from_json(forest_to_json(f)) == f);
  CHECK(forest_params_from_json(forest_params_to_json(p)) == p);
}

TEST_CASE("invalid parameters are rejected") {
  Rng rng(1);
  const Matrix x = random_matrix(rng, 5, 2);
  const auto y = random_vector(rng, 5);
  ForestParams p;
  p.n_trees = 0;
  CHECK_THROWS_AS(fit(x, y, p), ValidationError);
  p = {};
  p.max_features = 0.0;
  CHECK_THROWS_AS(fit(x, y, p), ValidationError);
  p = {};
  p.min_samples_leaf = 0;
  CHECK_THROWS_AS(fit(x, y, p), ValidationError);
  CHECK_THROWS_AS(fit(x, std::vector<double>{1, 2}, ForestParams{}), ValidationError);
}

TEST_CASE("predictions stay within the training target range") {
  Rng rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix x = random_matrix(rng, 30, 4);
    const auto y = random_vector(rng, 30, -7, 2);
    const Forest f = fit(x, y, small_params(static_cast<std::uint64_t>(trial)));
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    for (double p : f.predict(random_matrix(rng, 50, 4, -3, 3))) {
      CHECK(p >= *lo);
      CHECK(p <= *hi);
    }
  }
}

TEST_CASE("each unlimited-depth tree reproduces its in-bag targets exactly") {
  Rng rng(14);
  const Matrix x = random_matrix(rng, 30, 3);
  const auto y = random_vector(rng, 30);
  const Forest f = fit(x, y, small_params());
  for (std::size_t t = 0; t < f.trees.size(); ++t) {
    const auto& oob = f.oob_rows[t];
    for (std::size_t r = 0; r < x.rows(); ++r) {
      if (std::binary_search(oob.begin(), oob.end(), r)) continue;
      CHECK(f.trees[t].predict(x.row(r)) == y[r]);
    }
  }
}
