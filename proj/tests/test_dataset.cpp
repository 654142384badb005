#include <doctest.h>

#include <fstream>
#include <string>

#include "rfclust/common.hpp"
#include "rfclust/dataset.hpp"
#include "test_helpers.hpp"

using namespace rfclust;

namespace {

std::string features_csv(std::size_t n, std::size_t p) {
  std::string s = "f_id";
  for (std::size_t c = 0; c < p; ++c) s += ",feat_" + std::to_string(c);
  s += "\n";
  for (std::size_t r = 0; r < n; ++r) {
    s += std::to_string(r + 1);
    for (std::size_t c = 0; c < p; ++c) s += "," + std::to_string(0.5 * r + 0.01 * c);
    s += "\n";
  }
  return s;
}

std::string targets_csv(std::size_t n) {
  std::string s = "f_id,DE1,DE2,DE3\n";
  for (std::size_t r = 0; r < n; ++r) {
    s += std::to_string(r + 1) + "," + std::to_string(-1.0 * r) + ",1.5,2.5\n";
  }
  return s;
}

std::string error_of(const std::string& f, const std::string& t) {
  try {
    parse_dataset(f, t);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("30 problems x 64 features x 3 algorithms load with column order preserved") {
  const Dataset ds = parse_dataset(features_csv(30, 64), targets_csv(30));
  CHECK(ds.n_problems() == 30);
  CHECK(ds.n_features() == 64);
  CHECK(ds.targets.size() == 3);
  CHECK(ds.feature_names[0] == "feat_0");
  CHECK(ds.feature_names[63] == "feat_63");
  CHECK(ds.target("DE2")[7] == 1.5);
  CHECK(ds.features(2, 1) == doctest::Approx(1.01));
}

TEST_CASE("single-problem file is rejected for LOPO") {
  const std::string msg = error_of("f_id,a\n1,0.5\n", "f_id,DE1\n1,0.0\n");
  CHECK(msg.find("need >= 2 problems for LOPO") != std::string::npos);
}

TEST_CASE("NaN cell is reported with its row and column") {
  const std::string f =
      "f_id,ela_meta.lin_simple.adj_r2,other\n"
      "f1,0.1,0.2\n"
      "f2,0.3,0.4\n"
      "f3,NaN,0.6\n";
  const std::string t = "f_id,DE1\nf1,0\nf2,1\nf3,2\n";
  const std::string msg = error_of(f, t);
  CHECK(msg.find("f_id=f3") != std::string::npos);
  CHECK(msg.find("ela_meta.lin_simple.adj_r2") != std::string::npos);
  CHECK(msg.find("NaN") != std::string::npos);
}

TEST_CASE("malformed inputs are rejected") {
  const std::string t = "f_id,DE1\n1,0\n2,1\n";
  CHECK(error_of("id,a\n1,0\n2,1\n", t).find("f_id") != std::string::npos);
  CHECK(error_of("f_id,a\n1,0\n1,1\n", t).find("duplicate problem id") != std::string::npos);
  CHECK(error_of("f_id,a\n1,abc\n2,1\n", t).find("non-numeric") != std::string::npos);
  CHECK(error_of("f_id,a\n1,inf\n2,1\n", t).find("infinite") != std::string::npos);
  CHECK(error_of("f_id,a\n1,0\n2,1\n", "f_id,DE1\n1,0\n").find("missing targets") !=
        std::string::npos);
  CHECK(error_of("f_id,a\n1,0\n2\n", t).find("fields") != std::string::npos);
  CHECK(error_of("f_id,a,a\n1,0,0\n2,1,1\n", t).find("duplicate column") != std::string::npos);
}

TEST_CASE("quoted fields, CRLF, BOM and comment lines are accepted") {
  const std::string f = "\xEF\xBB\xBF# exported\r\nf_id,\"a,b\"\r\n\"1\",0.5\r\n2,1.5\r\n";
  const Dataset ds = parse_dataset(f, "f_id,DE1\n1,0\n2,1\n");
  CHECK(ds.feature_names[0] == "a,b");
  CHECK(ds.features(1, 0) == 1.5);
}

TEST_CASE("log_transform_targets") {
  CHECK(log_transform_targets(std::vector<double>{1.0}) == std::vector<double>{0.0});
  CHECK(log_transform_targets(std::vector<double>{100.0, 0.001}) ==
        std::vector<double>{2.0, -3.0});
  // Floor rule: log10(max(0, 1e-12)) = -12.
  CHECK(log_transform_targets(std::vector<double>{0.0}, 1e-12) == std::vector<double>{-12.0});
  CHECK_THROWS_AS(log_transform_targets(std::vector<double>{0.0}), ValidationError);
  CHECK_THROWS_AS(log_transform_targets(std::vector<double>{-1.0}), ValidationError);
  CHECK_THROWS_AS(log_transform_targets(std::vector<double>{1.0}, 0.0), ValidationError);
}

TEST_CASE("raw precision targets are log-transformed on load") {
  LoadOptions opts;
  opts.raw_precision_floor = kDefaultPrecisionFloor;
  const Dataset ds = parse_dataset("f_id,a\n1,0\n2,1\n", "f_id,DE1\n1,100\n2,0\n", opts);
  CHECK(ds.target("DE1") == std::vector<double>{2.0, -12.0});
}

TEST_CASE("lopo_folds") {
  SUBCASE("n=30 gives 30 folds") {
    const Dataset ds = parse_dataset(features_csv(30, 3), targets_csv(30));
    CHECK(lopo_folds(ds).size() == 30);
  }
  SUBCASE("n=2 gives two folds with one training problem each") {
    const Dataset ds = parse_dataset(features_csv(2, 3), targets_csv(2));
    const auto folds = lopo_folds(ds);
    REQUIRE(folds.size() == 2);
    CHECK(folds[0].train_problems == std::vector<std::string>{"2"});
    CHECK(folds[1].train_problems == std::vector<std::string>{"1"});
  }
  SUBCASE("n=5: every id is tested once and trained on exactly four times") {
    const Dataset ds = parse_dataset(features_csv(5, 3), targets_csv(5));
    const auto folds = lopo_folds(ds);
    REQUIRE(folds.size() == 5);
    std::map<std::string, int> tested, trained;
    for (const auto& f : folds) {
      ++tested[f.test_problem];
      CHECK(f.train_problems.size() == 4);
      for (const auto& id : f.train_problems) {
        CHECK(id != f.test_problem);
        ++trained[id];
      }
    }
    for (const auto& id : ds.problem_ids) {
      CHECK(tested[id] == 1);
      CHECK(trained[id] == 4);
    }
  }
}

TEST_CASE("write_dataset then load_dataset reproduces the dataset") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    Dataset ds;
    const std::size_t n = 2 + rng.below(20);
    const std::size_t p = 1 + rng.below(10);
    for (std::size_t i = 0; i < n; ++i) ds.problem_ids.push_back("p" + std::to_string(i));
    for (std::size_t c = 0; c < p; ++c) ds.feature_names.push_back("f," + std::to_string(c));
    ds.features = rfclust::testing::random_matrix(rng, n, p, -1e6, 1e6);
    ds.targets.push_back({"A", rfclust::testing::random_vector(rng, n, -12, 3)});
    ds.targets.push_back({"B", rfclust::testing::random_vector(rng, n, -12, 3)});
    const auto dir = rfclust::testing::scratch_dir("roundtrip");
    write_dataset(ds, dir / "f.csv", dir / "t.csv");
    CHECK(load_dataset(dir / "f.csv", dir / "t.csv") == ds);
    CHECK(dataset_from_json(dataset_to_json(ds)) == ds);
  }
}

TEST_CASE("nonconstant_columns") {
  Matrix x(3, 3);
  x(0, 0) = 1; x(1, 0) = 1; x(2, 0) = 1;
  x(0, 1) = 1; x(1, 1) = 2; x(2, 1) = 1;
  CHECK(nonconstant_columns(x) == std::vector<std::size_t>{1});
}
