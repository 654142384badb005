#include "rfclust/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rfclust/common.hpp"
#include "rfclust/kernels.hpp"

namespace rfclust {
namespace {

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

// Minimum-cost perfect matching on a square matrix (Hungarian method,
// potentials formulation). Returns assignment row -> column.
std::vector<std::size_t> hungarian(const std::vector<std::vector<long long>>& cost) {
  const std::size_t n = cost.size();
  constexpr long long kInf = std::numeric_limits<long long>::max() / 4;
  std::vector<long long> u(n + 1, 0), v(n + 1, 0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<long long> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      long long delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const long long cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n, 0);
  for (std::size_t j = 1; j <= n; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

void check_assignment(const ClusterAssignment& a, const char* what) {
  if (a.m < 1) throw ValidationError(std::string(what) + ": m must be >= 1");
  for (int label : a.labels) {
    if (label < 0 || label >= a.m) {
      throw ValidationError(std::string(what) + ": label out of range");
    }
  }
}

}  // namespace

Matrix cosine_distance_matrix(const Matrix& x) {
  const std::size_t n = x.rows();
  std::vector<double> norm_sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    norm_sq[i] = kernels::dot_terms(x.row(i), x.row(i)).uu;
    if (!(norm_sq[i] > 0.0)) {
      throw ValidationError("cosine distance: row " + std::to_string(i) + " has zero norm");
    }
  }
  Matrix d(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const kernels::DotTerms t = kernels::dot_terms(x.row(i), x.row(j));
      const double cos = std::clamp(t.uv / std::sqrt(t.uu * t.vv), -1.0, 1.0);
      d(i, j) = d(j, i) = 1.0 - cos;
    }
  }
  return d;
}

Dendrogram agglomerate(const Matrix& distances) {
  const std::size_t n = distances.rows();
  if (distances.cols() != n) throw ValidationError("agglomerate: distance matrix is not square");
  if (n < 2) throw ValidationError("agglomerate: need at least 2 points");
  for (std::size_t i = 0; i < n; ++i) {
    if (distances(i, i) != 0.0) throw ValidationError("agglomerate: nonzero diagonal");
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = distances(i, j);
      if (!std::isfinite(a) || a != distances(j, i)) {
        throw ValidationError("agglomerate: distance matrix must be finite and symmetric");
      }
    }
  }

  const std::size_t total = 2 * n - 1;
  Matrix dist(total, total, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) dist(i, j) = distances(i, j);
  }
  std::vector<std::size_t> size(total, 1);
  std::vector<std::size_t> active(n);
  std::iota(active.begin(), active.end(), 0);

  Dendrogram dendro;
  dendro.n_points = n;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    // active is kept ascending, so the first strict minimum is the
    // lexicographically smallest pair.
    std::size_t best_a = 0, best_b = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t ia = 0; ia < active.size(); ++ia) {
      for (std::size_t ib = ia + 1; ib < active.size(); ++ib) {
        const double v = dist(active[ia], active[ib]);
        if (v < best) {
          best = v;
          best_a = active[ia];
          best_b = active[ib];
        }
      }
    }
    const std::size_t id = n + step;
    size[id] = size[best_a] + size[best_b];
    const double wa = static_cast<double>(size[best_a]);
    const double wb = static_cast<double>(size[best_b]);
    for (std::size_t k : active) {
      if (k == best_a || k == best_b) continue;
      const double v = (wa * dist(k, best_a) + wb * dist(k, best_b)) / (wa + wb);
      dist(k, id) = dist(id, k) = v;
    }
    dendro.merges.push_back({best_a, best_b, best, size[id]});
    std::erase(active, best_a);
    std::erase(active, best_b);
    active.push_back(id);  // largest id so far, order preserved
  }
  return dendro;
}

ClusterAssignment cut(const Dendrogram& dendrogram, int m) {
  const std::size_t n = dendrogram.n_points;
  if (m < 1 || static_cast<std::size_t>(m) > n) {
    throw ValidationError("cut: m must be in [1, " + std::to_string(n) + "], got " +
                          std::to_string(m));
  }
  std::vector<std::size_t> parent(2 * n - 1);
  std::iota(parent.begin(), parent.end(), 0);
  const std::size_t merges = n - static_cast<std::size_t>(m);
  for (std::size_t k = 0; k < merges; ++k) {
    const Merge& mg = dendrogram.merges[k];
    const std::size_t id = n + k;
    parent[find_root(parent, mg.a)] = id;
    parent[find_root(parent, mg.b)] = id;
  }
  ClusterAssignment out;
  out.m = m;
  out.labels.assign(n, -1);
  std::vector<int> label_of_root(2 * n - 1, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = find_root(parent, i);
    if (label_of_root[root] < 0) label_of_root[root] = next++;
    out.labels[i] = label_of_root[root];
  }
  return out;
}

ClusterAssignment cluster_rows(const Matrix& x, int m) {
  return cut(agglomerate(cosine_distance_matrix(x)), m);
}

double silhouette(const Matrix& distances, const ClusterAssignment& assignment) {
  check_assignment(assignment, "silhouette");
  const std::size_t n = assignment.labels.size();
  if (distances.rows() != n || distances.cols() != n) {
    throw ValidationError("silhouette: distance matrix does not match labels");
  }
  if (assignment.m < 2) throw ValidationError("silhouette: need m >= 2");
  const auto m = static_cast<std::size_t>(assignment.m);
  std::vector<std::size_t> count(m, 0);
  for (int l : assignment.labels) ++count[static_cast<std::size_t>(l)];
  if (std::any_of(count.begin(), count.end(), [](std::size_t c) { return c == 0; })) {
    throw ValidationError("silhouette: empty cluster");
  }

  double total = 0.0;
  std::vector<double> sum_to(m);
  for (std::size_t i = 0; i < n; ++i) {
    const auto own = static_cast<std::size_t>(assignment.labels[i]);
    if (count[own] == 1) continue;
    std::fill(sum_to.begin(), sum_to.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sum_to[static_cast<std::size_t>(assignment.labels[j])] += distances(i, j);
    }
    const double a = sum_to[own] / static_cast<double>(count[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < m; ++c) {
      if (c != own) b = std::min(b, sum_to[c] / static_cast<double>(count[c]));
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

std::size_t disagreement_count(const ClusterAssignment& a, const ClusterAssignment& b) {
  check_assignment(a, "disagreement_count");
  check_assignment(b, "disagreement_count");
  if (a.labels.size() != b.labels.size()) {
    throw ValidationError("disagreement_count: assignments cover different point counts");
  }
  if (a.m != b.m) throw ValidationError("disagreement_count: cluster counts differ");
  const auto m = static_cast<std::size_t>(a.m);
  std::vector<std::vector<long long>> agree(m, std::vector<long long>(m, 0));
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    ++agree[static_cast<std::size_t>(a.labels[i])][static_cast<std::size_t>(b.labels[i])];
  }
  std::vector<std::vector<long long>> cost(m, std::vector<long long>(m));
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) cost[r][c] = -agree[r][c];
  }
  const auto match = hungarian(cost);
  long long matched = 0;
  for (std::size_t r = 0; r < m; ++r) matched += agree[r][match[r]];
  return a.labels.size() - static_cast<std::size_t>(matched);
}

std::vector<ClusterCountScore> cluster_count_curve(const Matrix& x, int m_min, int m_max) {
  const Matrix d = cosine_distance_matrix(x);
  const Dendrogram dendro = agglomerate(d);
  const int upper = std::min(m_max, static_cast<int>(x.rows()) - 1);
  std::vector<ClusterCountScore> curve;
  for (int m = std::max(2, m_min); m <= upper; ++m) {
    curve.push_back({m, silhouette(d, cut(dendro, m))});
  }
  return curve;
}

void write_dendrogram_csv(std::ostream& out, const Dendrogram& dendrogram) {
  out << "# schema_version=1 linkage=" << dendrogram.linkage << " metric=" << dendrogram.metric
      << '\n';
  out << "merge,cluster_a,cluster_b,distance,size\n";
  for (std::size_t k = 0; k < dendrogram.merges.size(); ++k) {
    const Merge& mg = dendrogram.merges[k];
    out << k << ',' << mg.a << ',' << mg.b << ',' << format_double(mg.distance) << ','
        << mg.size << '\n';
  }
}

}  // namespace rfclust
