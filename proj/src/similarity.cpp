#include "rfclust/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "rfclust/common.hpp"
#include "rfclust/kernels.hpp"

namespace rfclust {
namespace {

std::optional<double> from_terms(const kernels::DotTerms& t) {
  if (!(std::sqrt(t.uu) >= kZeroNormTolerance && std::sqrt(t.vv) >= kZeroNormTolerance)) {
    return std::nullopt;
  }
  // sqrt(uu·vv) rather than sqrt(uu)·sqrt(vv): identical vectors give exactly 1.
  return std::clamp(t.uv / std::sqrt(t.uu * t.vv), -1.0, 1.0);
}

// The weighted cosine is invariant to a positive rescaling of w. Dividing by
// the largest weight turns uniform weights into exact ones, so the uniform
// case reproduces the unweighted cosine bit for bit.
std::optional<double> weighted_terms(std::span<const double> u, std::span<const double> v,
                                     std::span<const double> w) {
  double top = 0.0;
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw ValidationError("similarity: weights must be finite and nonnegative");
    }
    top = std::max(top, x);
  }
  if (top == 0.0) return std::nullopt;
  std::vector<double> scaled(w.begin(), w.end());
  for (double& x : scaled) x /= top;
  return from_terms(kernels::weighted_dot_terms(u, v, scaled));
}

}  // namespace

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ValidationError("cosine: length mismatch");
  auto s = from_terms(kernels::dot_terms(u, v));
  if (!s) throw ValidationError("cosine: zero-norm vector");
  return *s;
}

double weighted_cosine(std::span<const double> u, std::span<const double> v,
                       std::span<const double> w) {
  if (u.size() != v.size() || u.size() != w.size()) {
    throw ValidationError("weighted_cosine: length mismatch");
  }
  auto s = weighted_terms(u, v, w);
  if (!s) throw ValidationError("weighted_cosine: zero weighted norm");
  return *s;
}

std::optional<double> try_similarity(std::span<const double> u, std::span<const double> v,
                                     std::span<const double> w) {
  if (u.size() != v.size()) throw ValidationError("similarity: length mismatch");
  if (w.empty()) return from_terms(kernels::dot_terms(u, v));
  if (w.size() != u.size()) throw ValidationError("similarity: weight length mismatch");
  return weighted_terms(u, v, w);
}

NeighborSet select_neighbors(std::span<const double> x_test, const Matrix& x_train,
                             std::span<const std::string> train_ids, double threshold,
                             std::span<const double> weights) {
  if (!(threshold > -1.0 && threshold <= 1.0)) {
    throw ValidationError("select_neighbors: threshold must be in (-1, 1]");
  }
  if (x_test.size() != x_train.cols()) {
    throw ValidationError("select_neighbors: test vector and training matrix differ in width");
  }
  if (train_ids.size() != x_train.rows()) {
    throw ValidationError("select_neighbors: one id per training row required");
  }
  NeighborSet out;
  out.threshold = threshold;
  for (std::size_t r = 0; r < x_train.rows(); ++r) {
    const auto s = try_similarity(x_test, x_train.row(r), weights);
    if (!s) {
      warn("similarity to training problem '" + train_ids[r] +
           "' is undefined (zero norm); treated as not similar");
      continue;
    }
    if (*s >= threshold) out.entries.push_back({train_ids[r], r, *s, 0.0});
  }
  std::stable_sort(out.entries.begin(), out.entries.end(),
                   [](const Neighbor& a, const Neighbor& b) { return a.similarity > b.similarity; });
  double total = 0.0;
  for (const auto& e : out.entries) total += e.similarity;
  if (!out.entries.empty() && !(total > 0.0)) {
    throw ComputeError("select_neighbors: similarities sum to a nonpositive value");
  }
  for (auto& e : out.entries) e.contribution = e.similarity / total;
  return out;
}

CalibratedPrediction calibrate(double rf_prediction, const NeighborSet& neighbors,
                               const std::map<std::string, double, std::less<>>& y_train) {
  CalibratedPrediction out;
  out.rf_prediction = rf_prediction;
  out.neighbors = neighbors;
  if (neighbors.empty()) {
    out.final_prediction = rf_prediction;
    return out;
  }
  double f = 0.0;
  for (const auto& e : neighbors.entries) {
    auto it = y_train.find(e.problem_id);
    if (it == y_train.end()) {
      throw ValidationError("calibrate: no target for neighbor '" + e.problem_id + "'");
    }
    f += e.contribution * it->second;
  }
  out.neighbor_mean = f;
  out.final_prediction = (rf_prediction + f) / 2.0;
  return out;
}

std::string_view scaling_mode_name(ScalingMode mode) {
  switch (mode) {
    case ScalingMode::none: return "none";
    case ScalingMode::minmax: return "minmax";
    case ScalingMode::zscore: return "zscore";
  }
  return "none";
}

ScalingMode parse_scaling_mode(std::string_view name) {
  if (name == "none") return ScalingMode::none;
  if (name == "minmax") return ScalingMode::minmax;
  if (name == "zscore") return ScalingMode::zscore;
  throw ValidationError("scaling must be none, minmax or zscore, got '" + std::string(name) + "'");
}

FeatureScaler FeatureScaler::fit(const Matrix& x_train, ScalingMode mode) {
  FeatureScaler s;
  s.mode_ = mode;
  const std::size_t p = x_train.cols();
  s.offset_.assign(p, 0.0);
  s.scale_.assign(p, 1.0);
  if (mode == ScalingMode::none) return s;
  if (x_train.rows() == 0) throw ValidationError("FeatureScaler: no training rows");
  for (std::size_t c = 0; c < p; ++c) {
    const std::vector<double> col = x_train.column(c);
    if (mode == ScalingMode::minmax) {
      const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
      s.offset_[c] = *lo;
      s.scale_[c] = *hi > *lo ? 1.0 / (*hi - *lo) : 0.0;
    } else {
      const double n = static_cast<double>(col.size());
      const double mean = kernels::sum(col) / n;
      const double var = kernels::centered_dot_terms(col, col, mean, mean).uu / n;
      s.offset_[c] = mean;
      s.scale_[c] = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
    }
  }
  return s;
}

std::vector<double> FeatureScaler::transform(std::span<const double> row) const {
  std::vector<double> out(row.begin(), row.end());
  if (mode_ == ScalingMode::none) return out;
  if (row.size() != offset_.size()) throw ValidationError("FeatureScaler: width mismatch");
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = (out[c] - offset_[c]) * scale_[c];
  return out;
}

Matrix FeatureScaler::transform(const Matrix& x) const {
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = transform(x.row(r));
    std::copy(row.begin(), row.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace rfclust
