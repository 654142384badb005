#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rfclust/matrix.hpp"

namespace rfclust {

// d(i, j) = 1 - cosine(x_i, x_j), with d(i, i) = 0. Zero-norm rows are an
// error (the distance is undefined).
Matrix cosine_distance_matrix(const Matrix& x);

struct Merge {
  std::size_t a = 0;  // cluster ids, a < b; ids >= n denote earlier merges
  std::size_t b = 0;
  double distance = 0.0;
  std::size_t size = 0;  // members of the merged cluster
};

struct Dendrogram {
  std::size_t n_points = 0;
  std::vector<Merge> merges;  // n_points - 1 entries; merge k creates id n_points + k
  std::string linkage = "average";
  std::string metric = "cosine";
};

// Average-linkage (UPGMA) agglomeration via the Lance-Williams update.
// Distance ties go to the lexicographically smallest (a, b) id pair.
Dendrogram agglomerate(const Matrix& distances);

struct ClusterAssignment {
  std::vector<int> labels;  // in [0, m)
  int m = 0;

  friend bool operator==(const ClusterAssignment&, const ClusterAssignment&) = default;
};

// State after the first n - m merges. Labels are numbered by the smallest
// point index in each cluster.
ClusterAssignment cut(const Dendrogram& dendrogram, int m);

// Convenience: cut(agglomerate(cosine_distance_matrix(x)), m).
ClusterAssignment cluster_rows(const Matrix& x, int m);

// Mean silhouette coefficient; singleton clusters contribute 0.
double silhouette(const Matrix& distances, const ClusterAssignment& assignment);

// n minus the largest number of points whose labels can be matched by a
// one-to-one relabeling (Hungarian assignment on the contingency table).
std::size_t disagreement_count(const ClusterAssignment& a, const ClusterAssignment& b);

struct ClusterCountScore {
  int m = 0;
  double silhouette = 0.0;
};

// Silhouette of the average-linkage cut for each m in [m_min, m_max]
// (clamped to n - 1).
std::vector<ClusterCountScore> cluster_count_curve(const Matrix& x, int m_min = 2,
                                                   int m_max = 10);

void write_dendrogram_csv(std::ostream& out, const Dendrogram& dendrogram);

}  // namespace rfclust
