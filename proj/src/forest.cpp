#include "rfclust/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rfclust/common.hpp"
#include "rfclust/kernels.hpp"
#include "rfclust/rng.hpp"

namespace rfclust {
namespace {

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double score = 0.0;  // -(S_l²/n_l + S_r²/n_r); lower is better
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const double> y, const ForestParams& params, Rng& rng)
      : x_(x), y_(y), params_(params), rng_(rng) {
    const auto p = static_cast<double>(x.cols());
    n_try_ = std::max<std::size_t>(1, static_cast<std::size_t>(params.max_features * p));
    n_try_ = std::min(n_try_, x.cols());
  }

  Tree build(std::vector<std::size_t> samples) {
    Tree tree;
    tree.nodes.emplace_back();
    grow(tree, 0, samples, 0);
    return tree;
  }

 private:
  void grow(Tree& tree, int node, std::vector<std::size_t>& samples, int depth) {
    const std::size_t n = samples.size();
    double total = 0.0;
    bool pure = true;
    for (std::size_t s : samples) {
      total += y_[s];
      pure = pure && y_[s] == y_[samples[0]];
    }
    // A pure leaf stores the target itself, which the mean might not reproduce
    // bit-for-bit.
    const double leaf_value = pure ? y_[samples[0]] : total / static_cast<double>(n);
    const auto min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);

    const bool depth_exhausted = params_.max_depth && depth >= *params_.max_depth;
    if (pure || depth_exhausted || n < static_cast<std::size_t>(params_.min_samples_split) ||
        n < 2 * min_leaf) {
      tree.nodes[node].value = leaf_value;
      return;
    }

    const SplitCandidate best = find_split(samples, total);
    if (best.feature < 0) {
      tree.nodes[node].value = leaf_value;
      return;
    }

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t s : samples) {
      (x_(s, best.feature) <= best.threshold ? left : right).push_back(s);
    }
    samples.clear();
    samples.shrink_to_fit();

    tree.nodes[node].feature = best.feature;
    tree.nodes[node].threshold = best.threshold;
    tree.nodes[node].value = leaf_value;
    const int l = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const int r = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[node].left = l;
    tree.nodes[node].right = r;
    grow(tree, l, left, depth + 1);
    grow(tree, r, right, depth + 1);
  }

  std::vector<std::size_t> candidate_features() {
    std::vector<std::size_t> features(x_.cols());
    std::iota(features.begin(), features.end(), 0);
    if (n_try_ < features.size()) {
      // Partial Fisher-Yates: the first n_try_ entries are a uniform subset.
      for (std::size_t i = 0; i < n_try_; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng_.below(features.size() - i));
        std::swap(features[i], features[j]);
      }
      features.resize(n_try_);
      std::sort(features.begin(), features.end());
    }
    return features;
  }

  SplitCandidate find_split(const std::vector<std::size_t>& samples, double total) {
    const std::size_t n = samples.size();
    const auto min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);
    const double tie_eps = 1e-12 * std::max(1.0, total * total / static_cast<double>(n));

    SplitCandidate best;
    best.score = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> order(samples);
    for (std::size_t f : candidate_features()) {
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return x_(a, f) < x_(b, f); });
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += y_[order[i]];
        const double lo = x_(order[i], f);
        const double hi = x_(order[i + 1], f);
        if (!(lo < hi)) continue;
        const std::size_t n_left = i + 1;
        const std::size_t n_right = n - n_left;
        if (n_left < min_leaf || n_right < min_leaf) continue;
        const double right_sum = total - left_sum;
        const double score = -(left_sum * left_sum / static_cast<double>(n_left) +
                               right_sum * right_sum / static_cast<double>(n_right));
        // Strict improvement keeps the lowest feature, then lowest threshold,
        // on ties.
        if (score < best.score - tie_eps) {
          double threshold = lo + (hi - lo) / 2.0;
          if (!(threshold < hi)) threshold = lo;
          best = {static_cast<int>(f), threshold, score};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const double> y_;
  const ForestParams& params_;
  Rng& rng_;
  std::size_t n_try_ = 1;
};

// Target first, then the feature row lexicographically, ties by original
// index. Leading with the target keeps the order independent of column order
// whenever targets are distinct.
std::vector<std::size_t> canonical_row_order(const Matrix& x, std::span<const double> y) {
  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (y[a] != y[b]) return y[a] < y[b];
    auto ra = x.row(a);
    auto rb = x.row(b);
    for (std::size_t c = 0; c < ra.size(); ++c) {
      if (ra[c] != rb[c]) return ra[c] < rb[c];
    }
    return false;
  });
  return order;
}

}  // namespace

void ForestParams::validate() const {
  if (n_trees < 1) throw ValidationError("n_trees must be >= 1");
  if (max_depth && *max_depth < 1) throw ValidationError("max_depth must be >= 1");
  if (min_samples_split < 2) throw ValidationError("min_samples_split must be >= 2");
  if (min_samples_leaf < 1) throw ValidationError("min_samples_leaf must be >= 1");
  if (!(max_features > 0.0 && max_features <= 1.0)) {
    throw ValidationError("max_features must be in (0, 1]");
  }
}

double Tree::predict(std::span<const double> x) const {
  int node = 0;
  while (!nodes[node].is_leaf()) {
    const TreeNode& n = nodes[node];
    node = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[node].value;
}

std::vector<int> Tree::used_features() const {
  std::vector<int> out;
  for (const auto& n : nodes) {
    if (!n.is_leaf()) out.push_back(n.feature);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double Forest::predict(std::span<const double> x) const {
  if (x.size() != feature_count) {
    throw ValidationError("predict: expected " + std::to_string(feature_count) +
                          " features, got " + std::to_string(x.size()));
  }
  double total = 0.0;
  for (const auto& tree : trees) total += tree.predict(x);
  return total / static_cast<double>(trees.size());
}

std::vector<double> Forest::predict(const Matrix& x) const {
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = predict(x.row(r));
  return out;
}

Forest fit(const Matrix& x, std::span<const double> y, const ForestParams& params) {
  params.validate();
  if (x.rows() == 0 || x.cols() == 0) throw ValidationError("fit: empty input");
  if (x.rows() != y.size()) throw ValidationError("fit: X rows and y length differ");
  if (x.rows() < 2) throw ValidationError("fit: need at least 2 training rows");
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw ValidationError("fit: non-finite feature value");
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw ValidationError("fit: non-finite target value");
  }

  const std::size_t n = x.rows();
  const std::vector<std::size_t> canonical = canonical_row_order(x, y);

  Forest forest;
  forest.params = params;
  forest.feature_count = x.cols();
  forest.training_rows = n;
  forest.trees.reserve(static_cast<std::size_t>(params.n_trees));
  forest.oob_rows.reserve(static_cast<std::size_t>(params.n_trees));

  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(params.seed, {static_cast<std::uint64_t>(t)}));
    std::vector<std::size_t> samples;
    std::vector<std::size_t> oob;
    if (params.bootstrap) {
      std::vector<unsigned> counts(n, 0);
      for (std::size_t i = 0; i < n; ++i) ++counts[rng.below(n)];
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t row = canonical[k];
        if (counts[k] == 0) oob.push_back(row);
        samples.insert(samples.end(), counts[k], row);
      }
      std::sort(oob.begin(), oob.end());
    } else {
      samples = canonical;
    }
    TreeBuilder builder(x, y, params, rng);
    forest.trees.push_back(builder.build(std::move(samples)));
    forest.oob_rows.push_back(std::move(oob));
  }
  return forest;
}

double oob_mae(const Forest& forest, const Matrix& x, std::span<const double> y) {
  if (!forest.params.bootstrap) throw ValidationError("oob_mae: forest was fit without bootstrap");
  if (x.rows() != y.size()) throw ValidationError("oob_mae: X rows and y length differ");
  if (x.rows() != forest.training_rows) {
    throw ValidationError("oob_mae: X does not match the forest's training rows");
  }
  std::vector<double> sum(x.rows(), 0.0);
  std::vector<unsigned> count(x.rows(), 0);
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    for (std::size_t row : forest.oob_rows[t]) {
      sum[row] += forest.trees[t].predict(x.row(row));
      ++count[row];
    }
  }
  double total = 0.0;
  std::size_t used = 0;
  std::size_t skipped = 0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    if (count[r] == 0) {
      ++skipped;
      continue;
    }
    total += std::fabs(y[r] - sum[r] / count[r]);
    ++used;
  }
  if (used == 0) throw ValidationError("oob_mae: no row is out-of-bag for any tree");
  if (skipped > 0) {
    warn("oob_mae: " + std::to_string(skipped) + " row(s) never out-of-bag, excluded");
  }
  return total / static_cast<double>(used);
}

double mae(std::span<const double> predictions, std::span<const double> truth) {
  if (predictions.size() != truth.size()) throw ValidationError("mae: length mismatch");
  if (predictions.empty()) throw ValidationError("mae: empty input");
  return kernels::sum_abs_diff(predictions, truth) / static_cast<double>(predictions.size());
}

nlohmann::ordered_json forest_params_to_json(const ForestParams& p) {
  nlohmann::ordered_json j;
  j["n_trees"] = p.n_trees;
  j["max_depth"] = p.max_depth ? nlohmann::ordered_json(*p.max_depth) : nlohmann::ordered_json();
  j["min_samples_split"] = p.min_samples_split;
  j["min_samples_leaf"] = p.min_samples_leaf;
  j["max_features"] = p.max_features;
  j["bootstrap"] = p.bootstrap;
  j["seed"] = p.seed;
  return j;
}

ForestParams forest_params_from_json(const nlohmann::ordered_json& j) {
  ForestParams p;
  p.n_trees = j.at("n_trees").get<int>();
  if (!j.at("max_depth").is_null()) p.max_depth = j.at("max_depth").get<int>();
  p.min_samples_split = j.at("min_samples_split").get<int>();
  p.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  p.max_features = j.at("max_features").get<double>();
  p.bootstrap = j.at("bootstrap").get<bool>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.validate();
  return p;
}

nlohmann::ordered_json forest_to_json(const Forest& forest) {
  nlohmann::ordered_json j;
  j["params"] = forest_params_to_json(forest.params);
  j["feature_count"] = forest.feature_count;
  j["training_rows"] = forest.training_rows;
  auto trees = nlohmann::ordered_json::array();
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    std::vector<int> feature, left, right;
    std::vector<double> threshold, value;
    for (const auto& n : forest.trees[t].nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
    }
    nlohmann::ordered_json tree;
    tree["feature"] = feature;
    tree["threshold"] = threshold;
    tree["left"] = left;
    tree["right"] = right;
    tree["value"] = value;
    tree["oob_rows"] = forest.oob_rows[t];
    trees.push_back(std::move(tree));
  }
  j["trees"] = std::move(trees);
  return j;
}

Forest forest_from_json(const nlohmann::ordered_json& j) {
  Forest forest;
  try {
    forest.params = forest_params_from_json(j.at("params"));
    forest.feature_count = j.at("feature_count").get<std::size_t>();
    forest.training_rows = j.at("training_rows").get<std::size_t>();
    for (const auto& tj : j.at("trees")) {
      auto feature = tj.at("feature").get<std::vector<int>>();
      auto threshold = tj.at("threshold").get<std::vector<double>>();
      auto left = tj.at("left").get<std::vector<int>>();
      auto right = tj.at("right").get<std::vector<int>>();
      auto value = tj.at("value").get<std::vector<double>>();
      const std::size_t m = feature.size();
      if (threshold.size() != m || left.size() != m || right.size() != m || value.size() != m ||
          m == 0) {
        throw ValidationError("model JSON: inconsistent tree arrays");
      }
      Tree tree;
      for (std::size_t i = 0; i < m; ++i) {
        const bool leaf = feature[i] < 0;
        const bool bad_children = !leaf && (left[i] <= static_cast<int>(i) ||
                                            right[i] <= static_cast<int>(i) ||
                                            left[i] >= static_cast<int>(m) ||
                                            right[i] >= static_cast<int>(m));
        if (bad_children || (!leaf && feature[i] >= static_cast<int>(forest.feature_count))) {
          throw ValidationError("model JSON: invalid node " + std::to_string(i));
        }
        tree.nodes.push_back({feature[i], threshold[i], left[i], right[i], value[i]});
      }
      forest.trees.push_back(std::move(tree));
      forest.oob_rows.push_back(tj.at("oob_rows").get<std::vector<std::size_t>>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed model JSON: ") + e.what());
  }
  if (forest.trees.empty()) throw ValidationError("model JSON: no trees");
  return forest;
}

}  // namespace rfclust
