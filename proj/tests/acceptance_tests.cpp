// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.
// Tolerances and sizes are pinned here and printed with each result.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rfclust/cli.hpp"
#include "rfclust/clustering.hpp"
#include "rfclust/common.hpp"
#include "rfclust/feature_selection.hpp"
#include "rfclust/fixtures.hpp"
#include "rfclust/harness.hpp"
#include "rfclust/importance.hpp"
#include "rfclust/kernels.hpp"
#include "rfclust/rng.hpp"
#include "rfclust/similarity.hpp"
#include "rfclust/weights.hpp"

using namespace rfclust;
namespace fs = std::filesystem;

namespace {

constexpr double kCosineTol = 1e-12;      // criterion 2
constexpr double kWeightSumTol = 1e-12;   // criterion 4
constexpr double kFastLimitSec = 1.0;     // criteria 2 and 7
constexpr double kFixtureLimitSec = 30.0; // criterion 10
constexpr double kThresholds[] = {0.5, 0.7, 0.9};

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

RunConfig fixture_config() {
  RunConfig c;
  c.algorithm = "DE1";
  c.seed = 1;
  c.jobs = 1;
  return c;
}

struct FixtureRun {
  Fixture fixture;
  RunSummary summary;
  double seconds = 0.0;
};

FixtureRun run_fixture(double deceptive_fraction) {
  FixtureSpec spec;
  spec.deceptive_fraction = deceptive_fraction;
  FixtureRun r{generate_fixture(spec), {}, 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  r.summary = run_lopo(r.fixture.dataset, fixture_config());
  r.seconds = seconds_since(t0);
  return r;
}

// --- criterion 1 -----------------------------------------------------------

Outcome criterion1() {
  const auto dir = fs::temp_directory_path() / "rfclust_acceptance_c1";
  fs::remove_all(dir);
  std::ostringstream out, err;
  if (run_cli({"synth", "--out", (dir / "data").string()}, out, err) != 0) {
    return {false, "synth failed: " + err.str()};
  }
  const int code = run_cli({"run", "--features", (dir / "data/features.csv").string(),
                            "--targets", (dir / "data/targets.csv").string(), "--algo", "DE1",
                            "--jobs", "1", "--no-svg", "--out", (dir / "run").string()},
                           out, err);
  if (code != 0) return {false, "run failed: " + err.str()};
  std::ifstream in(dir / "run/summary.csv");
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') rows.push_back(line);
  }
  // Header, RF, then three variants at three thresholds.
  const bool shaped = rows.size() == 11 && rows[0] == "model,threshold,DE1" &&
                      rows[1].rfind("RF,", 0) == 0;
  return {shaped,
          "published MAE values need the external 64-feature dataset and are not reproduced; "
          "pipeline emits a model x threshold MAE summary (" +
              std::to_string(rows.size() - 1) + " rows) from supplied CSVs"};
}

// --- criterion 2 -----------------------------------------------------------

Outcome criterion2() {
  Rng rng(2);
  double worst = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 1000; ++i) {
    const std::size_t p = 2 + rng.below(39);
    std::vector<double> u(p), v(p), raw(p), wu(p), wv(p);
    for (std::size_t j = 0; j < p; ++j) {
      u[j] = rng.uniform(-1, 1);
      v[j] = rng.uniform(-1, 1);
      raw[j] = rng.uniform();
    }
    const auto w = normalize_weights(raw).weights;
    for (std::size_t j = 0; j < p; ++j) {
      wu[j] = w[j] * u[j];
      wv[j] = w[j] * v[j];
    }
    worst = std::max(worst, std::fabs(weighted_cosine(u, v, w) - cosine(wu, wv)));
  }
  const double secs = seconds_since(t0);
  return {worst < kCosineTol && secs < kFastLimitSec,
          "max |diff| " + fmt(worst) + " over 1000 triples, p in 2..40 (tol " + fmt(kCosineTol) +
              "); " + fmt(secs) + " s (limit 1 s)"};
}

// --- criterion 3 -----------------------------------------------------------

Outcome criterion3(const FixtureRun& run) {
  const Dataset& ds = run.fixture.dataset;
  const auto folds = lopo_folds(ds);
  const auto& y = ds.target("DE1");
  std::size_t compared = 0, mismatches = 0;
  for (const FoldResult& fold : run.summary.folds) {
    const FoldSpec& spec = folds[fold.test_index];
    const auto& cols = fold.portfolio.kept;
    const Matrix x_train = ds.features.select_rows(spec.train_indices).select_columns(cols);
    std::vector<double> x_test;
    for (auto c : cols) x_test.push_back(ds.features(fold.test_index, c));
    const auto scaler = FeatureScaler::fit(x_train, run.summary.config.scaling);
    const Matrix xs = scaler.transform(x_train);
    const auto ts = scaler.transform(x_test);
    std::map<std::string, double, std::less<>> y_train;
    for (auto i : spec.train_indices) y_train.emplace(ds.problem_ids[i], y[i]);
    const auto uniform = uniform_weights(cols);
    for (double t : kThresholds) {
      const auto ns = select_neighbors(ts, xs, spec.train_problems, t, uniform.weights);
      const auto weighted = calibrate(fold.rf_prediction, ns, y_train);
      const auto& plain = fold.cell(Variant::rfclust, t).prediction;
      ++compared;
      if (!(weighted.neighbors == plain.neighbors) ||
          weighted.final_prediction != plain.final_prediction) {
        ++mismatches;
      }
    }
  }
  return {mismatches == 0 && compared == 90,
          std::to_string(compared) + " (fold, threshold) cells compared, " +
              std::to_string(mismatches) + " differ (exact comparison)"};
}

// --- criterion 4 -----------------------------------------------------------

Outcome criterion4(const FixtureRun& run) {
  const auto& y = run.fixture.dataset.target("DE1");
  // The fixture run finds neighbors everywhere; a near-1 threshold adds
  // folds where none qualify.
  RunConfig strict = fixture_config();
  strict.thresholds = {0.9999};
  strict.variants = {Variant::rfclust, Variant::rfclust_unsup};
  strict.forest.n_trees = 20;
  const RunSummary sparse = run_lopo(run.fixture.dataset, strict);
  std::vector<const FoldResult*> all;
  for (const auto& f : run.summary.folds) all.push_back(&f);
  for (const auto& f : sparse.folds) all.push_back(&f);

  std::size_t k0 = 0, k1 = 0, bad = 0;
  double worst_sum = 0.0;
  for (const FoldResult* fp : all) {
    const FoldResult& fold = *fp;
    for (const FoldCell& cell : fold.cells) {
      if (cell.variant == Variant::rf) continue;
      const auto& p = cell.prediction;
      if (cell.k() == 0) {
        ++k0;
        if (p.final_prediction != fold.rf_prediction) ++bad;
        continue;
      }
      ++k1;
      double sum_w = 0.0, mean = 0.0;
      for (const auto& n : p.neighbors.entries) {
        sum_w += n.contribution;
        mean += n.contribution * y[run.fixture.dataset.problem_index(n.problem_id)];
      }
      worst_sum = std::max(worst_sum, std::fabs(sum_w - 1.0));
      const double expected = (fold.rf_prediction + mean) / 2.0;
      if (std::fabs(sum_w - 1.0) >= kWeightSumTol ||
          std::fabs(p.final_prediction - expected) > 1e-12 * (1.0 + std::fabs(expected))) {
        ++bad;
      }
    }
  }
  return {bad == 0 && k0 > 0 && k1 > 0,
          std::to_string(k0) + " cells with k=0 equal RF exactly, " + std::to_string(k1) +
              " cells with k>=1 are midpoints; max |sum w - 1| " + fmt(worst_sum) + " (tol " +
              fmt(kWeightSumTol) + "); violations " + std::to_string(bad)};
}

// --- criterion 5 -----------------------------------------------------------

Outcome criterion5(const FixtureRun& run) {
  auto ids = [](const NeighborSet& ns) {
    std::set<std::string> s;
    for (const auto& e : ns.entries) s.insert(e.problem_id);
    return s;
  };
  std::size_t checked = 0, bad = 0;
  for (const FoldResult& fold : run.summary.folds) {
    for (Variant v : {Variant::rfclust, Variant::rfclust_unsup, Variant::rfclust_perm}) {
      const auto a = ids(fold.cell(v, 0.9).prediction.neighbors);
      const auto b = ids(fold.cell(v, 0.7).prediction.neighbors);
      const auto c = ids(fold.cell(v, 0.5).prediction.neighbors);
      ++checked;
      if (!std::includes(b.begin(), b.end(), a.begin(), a.end()) ||
          !std::includes(c.begin(), c.end(), b.begin(), b.end())) {
        ++bad;
      }
    }
  }
  return {bad == 0, std::to_string(checked) + " (fold, variant) pairs, " + std::to_string(bad) +
                        " violate N(0.9) <= N(0.7) <= N(0.5)"};
}

// --- criterion 6 -----------------------------------------------------------

std::set<std::vector<std::size_t>> brute_force_cliques(const CorrelationGraph& g) {
  const std::size_t n = g.n_nodes;
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (auto [i, j] : g.edges) adj[i][j] = adj[j][i] = true;
  auto is_clique = [&](unsigned mask) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if ((mask >> i & 1U) && (mask >> j & 1U) && !adj[i][j]) return false;
    return true;
  };
  std::set<std::vector<std::size_t>> out;
  for (unsigned mask = 1; mask < (1U << n); ++mask) {
    if (!is_clique(mask)) continue;
    bool maximal = true;
    for (std::size_t v = 0; v < n && maximal; ++v)
      if (!(mask >> v & 1U) && is_clique(mask | (1U << v))) maximal = false;
    std::vector<std::size_t> c;
    for (std::size_t v = 0; v < n; ++v)
      if (mask >> v & 1U) c.push_back(v);
    if (maximal && c.size() >= 2) out.insert(c);
  }
  return out;
}

Outcome criterion6() {
  Rng rng(6);
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    CorrelationGraph g;
    g.n_nodes = 1 + rng.below(10);
    const double density = rng.uniform(0.1, 0.9);
    for (std::size_t i = 0; i < g.n_nodes; ++i)
      for (std::size_t j = i + 1; j < g.n_nodes; ++j)
        if (rng.uniform() < density) g.edges.emplace_back(i, j);
    const auto got = correlated_groups(g);
    const std::set<std::vector<std::size_t>> got_set(got.begin(), got.end());
    if (got_set != brute_force_cliques(g) || got_set.size() != got.size()) ++mismatches;
  }

  // Informative member vs a noisier correlated copy: the informative one stays.
  Rng data(31);
  const std::size_t n = 40;
  Matrix x(n, 2);
  std::vector<double> y(n);
  for (std::size_t r = 0; r < n; ++r) {
    y[r] = data.uniform(-5, 5);
    x(r, 0) = y[r] + 0.6 * data.normal();
    x(r, 1) = y[r];
  }
  const auto portfolio = select_features(x, y, SelectionConfig{});
  const bool representative_ok = portfolio.groups.size() == 1 &&
                                 portfolio.kept == std::vector<std::size_t>{1};
  return {mismatches == 0 && representative_ok,
          "100 random graphs (<= 10 nodes): " + std::to_string(mismatches) +
              " differ from brute force; informative member kept: " +
              (representative_ok ? "yes" : "no")};
}

// --- criterion 7 -----------------------------------------------------------

Outcome criterion7() {
  Rng rng(7);
  int mismatches = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 1 + static_cast<int>(rng.below(5));
    const std::size_t n = static_cast<std::size_t>(m) + rng.below(16);
    ClusterAssignment a{{}, m}, b{{}, m};
    for (std::size_t i = 0; i < n; ++i) {
      a.labels.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(m))));
      b.labels.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(m))));
    }
    std::vector<int> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    std::size_t best = n;
    do {
      std::size_t diff = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (perm[static_cast<std::size_t>(a.labels[i])] != b.labels[i]) ++diff;
      best = std::min(best, diff);
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (disagreement_count(a, b) != best) ++mismatches;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < kFastLimitSec,
          "200 instances, m <= 5: " + std::to_string(mismatches) + " differ from the m! oracle; " +
              fmt(secs) + " s (limit 1 s)"};
}

// --- criterion 8 -----------------------------------------------------------

Outcome criterion8() {
  FixtureSpec spec;
  spec.p_relevant = 1;
  spec.p_nuisance = 8;
  spec.n_correlated_copies = 0;
  spec.n_clusters = 2;
  const Fixture fx = generate_fixture(spec);
  const auto result = unsupervised_importance(fx.dataset.features, spec.n_clusters);
  const auto& w = result.weights.weights;
  bool maximal = true, nuisance_zero = true;
  for (std::size_t f = 1; f < w.size(); ++f) {
    maximal = maximal && w[0] > w[f];
    nuisance_zero = nuisance_zero && w[f] == 0.0;
  }
  return {maximal && nuisance_zero,
          "n=30, m=2, separating feature weight " + fmt(w[0]) + ", nuisance weights all 0: " +
              (nuisance_zero ? "yes" : "no")};
}

// --- criterion 9 -----------------------------------------------------------

Outcome criterion9() {
  Rng rng(9);
  const std::size_t n = 30;
  Matrix x(n, 3);
  std::vector<double> y(n);
  for (std::size_t r = 0; r < n; ++r) {
    x(r, 0) = rng.uniform(-1, 1);
    x(r, 1) = rng.uniform(-1, 1);
    x(r, 2) = 0.25;  // ignored by every split
    y[r] = x(r, 0);
  }
  ForestParams params;
  params.seed = 1;
  const Forest forest = fit(x, y, params);
  const auto r = permutation_importance(forest, x, y, 15, 1);
  const auto& w = r.weights.weights;
  const bool maximal = w[0] > w[1] && w[0] > w[2];
  return {maximal && r.raw[2] == 0.0,
          "y = x1, n_repeats=15, seed=1: weights (" + fmt(w[0]) + ", " + fmt(w[1]) + ", " +
              fmt(w[2]) + "), ignored raw " + fmt(r.raw[2]) + " (must be exactly 0)"};
}

// --- criterion 10 ----------------------------------------------------------

Outcome criterion10(const FixtureRun& honest) {
  const FixtureRun deceptive = run_fixture(0.2);

  const auto rf0 = honest.summary.errors(Variant::rf, 0.9);
  const auto cl0 = honest.summary.errors(Variant::rfclust, 0.9);
  const auto k0 = honest.summary.neighbor_counts(Variant::rfclust, 0.9);
  double rf_sum = 0, cl_sum = 0;
  std::size_t covered = 0;
  for (std::size_t i = 0; i < rf0.size(); ++i) {
    if (k0[i] == 0) continue;
    ++covered;
    rf_sum += rf0[i];
    cl_sum += cl0[i];
  }
  const bool part_a = covered > 0 && cl_sum <= rf_sum;

  const auto rf1 = deceptive.summary.errors(Variant::rf, 0.9);
  const auto cl1 = deceptive.summary.errors(Variant::rfclust, 0.9);
  const auto k1 = deceptive.summary.neighbor_counts(Variant::rfclust, 0.9);
  double rf_dec = 0, cl_dec = 0;
  std::size_t dec_covered = 0;
  for (std::size_t i = 0; i < rf1.size(); ++i) {
    if (!deceptive.fixture.manifest.deceptive[i] || k1[i] == 0) continue;
    ++dec_covered;
    rf_dec += rf1[i];
    cl_dec += cl1[i];
  }
  const bool part_b = dec_covered > 0 && cl_dec >= rf_dec;
  const double secs = std::max(honest.seconds, deceptive.seconds);
  const bool timely = secs < kFixtureLimitSec;

  auto mean = [](double s, std::size_t n) { return n ? s / static_cast<double>(n) : 0.0; };
  return {part_a && part_b && timely,
          "deceptive=0: RF+clust(0.9) MAE " + fmt(mean(cl_sum, covered)) + " vs RF " +
              fmt(mean(rf_sum, covered)) + " on " + std::to_string(covered) +
              " problems with k>=1; deceptive=0.2: RF+clust " + fmt(mean(cl_dec, dec_covered)) +
              " vs RF " + fmt(mean(rf_dec, dec_covered)) + " on " + std::to_string(dec_covered) +
              " deceptive problems with k>=1; slowest run " + fmt(secs) + " s (limit 30 s)"};
}

// --- criterion 11 ----------------------------------------------------------

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    files[fs::relative(entry.path(), root).generic_string()] = s.str();
  }
  return files;
}

Outcome criterion11() {
  const auto dir = fs::temp_directory_path() / "rfclust_acceptance_c11";
  fs::remove_all(dir);
  std::ostringstream out, err;
  if (run_cli({"synth", "--out", (dir / "data").string()}, out, err) != 0) {
    return {false, "synth failed: " + err.str()};
  }
  std::vector<std::map<std::string, std::string>> trees;
  for (const char* name : {"a", "b"}) {
    std::ostringstream o, e;
    const int code = run_cli({"run", "--features", (dir / "data/features.csv").string(),
                              "--targets", (dir / "data/targets.csv").string(), "--algo", "DE1",
                              "--seed", "1", "--save-models", "--out", (dir / name).string()},
                             o, e);
    if (code != 0) return {false, "run failed: " + e.str()};
    trees.push_back(read_tree(dir / name));
  }
  return {trees[0] == trees[1] && !trees[0].empty(),
          std::to_string(trees[0].size()) + " output files compared byte for byte"};
}

// --- criterion 12 ----------------------------------------------------------

Outcome criterion12() {
  const Fixture fx = generate_fixture(FixtureSpec{});
  const RunConfig cfg = fixture_config();
  const auto folds = lopo_folds(fx.dataset);
  std::size_t changed = 0;
  for (const FoldSpec& fold : folds) {
    const FoldResult base = run_fold(fx.dataset, fold, cfg);
    Dataset perturbed = fx.dataset;
    Rng rng(derive_seed(12, {fold.test_index}));
    for (double& v : perturbed.features.row(fold.test_index)) v += rng.uniform(-5, 5);
    const FoldResult after = run_fold(perturbed, fold, cfg);
    if (base.portfolio_hash != after.portfolio_hash || base.weights_hash != after.weights_hash ||
        base.model_hash != after.model_hash) {
      ++changed;
    }
  }
  return {changed == 0, std::to_string(folds.size()) +
                            " folds with the held-out row perturbed; folds whose portfolio, "
                            "weight or model hash changed: " +
                            std::to_string(changed)};
}

}  // namespace

int main() {
  // Warnings are expected on small bootstraps; keep the report readable.
  std::size_t warnings = 0;
  set_warning_sink([&](std::string_view) { ++warnings; });

  std::printf("kernel backend: %s\n",
              std::string(kernels::backend_name(kernels::active_backend())).c_str());
  const FixtureRun honest = run_fixture(0.0);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"C1  reproducibility statement", criterion1},
      {"C2  weighted cosine identity", criterion2},
      {"C3  uniform-weight degeneration", [&] { return criterion3(honest); }},
      {"C4  calibration contract", [&] { return criterion4(honest); }},
      {"C5  threshold monotonicity", [&] { return criterion5(honest); }},
      {"C6  feature-selection oracle", criterion6},
      {"C7  disagreement oracle", criterion7},
      {"C8  unsupervised importance recovery", criterion8},
      {"C9  permutation importance recovery", criterion9},
      {"C10 LOPO improvement on planted data", [&] { return criterion10(honest); }},
      {"C11 determinism", criterion11},
      {"C12 leakage freedom", criterion12},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed (%zu warnings suppressed)\n",
              static_cast<int>(criteria.size()) - failures, criteria.size(), warnings);
  return failures == 0 ? 0 : 1;
}
