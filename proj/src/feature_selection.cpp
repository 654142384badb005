#include "rfclust/feature_selection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rfclust/common.hpp"
#include "rfclust/kernels.hpp"

namespace rfclust {
namespace {

bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
}

using NodeSet = std::vector<std::size_t>;  // sorted ascending

NodeSet intersect(const NodeSet& a, const NodeSet& b) {
  NodeSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

// Bron-Kerbosch with Tomita pivoting.
void bron_kerbosch(NodeSet& r, NodeSet p, NodeSet x, const std::vector<NodeSet>& adj,
                   std::vector<NodeSet>& out) {
  if (p.empty() && x.empty()) {
    NodeSet clique = r;
    std::sort(clique.begin(), clique.end());
    out.push_back(std::move(clique));
    return;
  }
  std::size_t pivot = 0;
  std::size_t best = 0;
  bool have_pivot = false;
  for (const NodeSet* set : {&p, &x}) {
    for (std::size_t u : *set) {
      const std::size_t covered = intersect(p, adj[u]).size();
      if (!have_pivot || covered > best) {
        pivot = u;
        best = covered;
        have_pivot = true;
      }
    }
  }
  NodeSet candidates;
  std::set_difference(p.begin(), p.end(), adj[pivot].begin(), adj[pivot].end(),
                      std::back_inserter(candidates));
  for (std::size_t v : candidates) {
    r.push_back(v);
    bron_kerbosch(r, intersect(p, adj[v]), intersect(x, adj[v]), adj, out);
    r.pop_back();
    p.erase(std::lower_bound(p.begin(), p.end(), v));
    x.insert(std::lower_bound(x.begin(), x.end(), v), v);
  }
}

}  // namespace

double pearson(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ValidationError("pearson: length mismatch");
  if (u.size() < 2) throw ValidationError("pearson: need at least 2 observations");
  if (is_constant(u) || is_constant(v)) throw ValidationError("pearson: constant input vector");
  const double n = static_cast<double>(u.size());
  const double mu_u = kernels::sum(u) / n;
  const double mu_v = kernels::sum(v) / n;
  const kernels::DotTerms t = kernels::centered_dot_terms(u, v, mu_u, mu_v);
  if (!(t.uu > 0.0 && t.vv > 0.0)) throw ValidationError("pearson: zero variance");
  return std::clamp(t.uv / std::sqrt(t.uu * t.vv), -1.0, 1.0);
}

std::string_view correlation_mode_name(CorrelationMode mode) {
  return mode == CorrelationMode::absolute ? "absolute" : "signed";
}

CorrelationMode parse_correlation_mode(std::string_view name) {
  if (name == "absolute") return CorrelationMode::absolute;
  if (name == "signed") return CorrelationMode::signed_;
  throw ValidationError("correlation mode must be 'absolute' or 'signed', got '" +
                        std::string(name) + "'");
}

std::vector<std::vector<std::size_t>> CorrelationGraph::adjacency() const {
  std::vector<std::vector<std::size_t>> adj(n_nodes);
  for (auto [i, j] : edges) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());
  return adj;
}

CorrelationGraph build_correlation_graph(const Matrix& x_train, double threshold,
                                         CorrelationMode mode) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ValidationError("correlation threshold must be in (0, 1)");
  }
  if (x_train.rows() < 2) throw ValidationError("correlation graph: need at least 2 rows");
  CorrelationGraph g;
  g.n_nodes = x_train.cols();
  std::vector<std::vector<double>> columns;
  columns.reserve(x_train.cols());
  for (std::size_t c = 0; c < x_train.cols(); ++c) columns.push_back(x_train.column(c));
  for (std::size_t i = 0; i < g.n_nodes; ++i) {
    for (std::size_t j = i + 1; j < g.n_nodes; ++j) {
      double r = 0.0;
      try {
        r = pearson(columns[i], columns[j]);
      } catch (const ValidationError&) {
        throw ValidationError("correlation graph: column " +
                              std::to_string(is_constant(columns[i]) ? i : j) +
                              " is constant; drop zero-variance columns first");
      }
      const double score = mode == CorrelationMode::absolute ? std::fabs(r) : r;
      if (score > threshold) g.edges.emplace_back(i, j);
    }
  }
  return g;
}

std::vector<std::vector<std::size_t>> correlated_groups(const CorrelationGraph& graph,
                                                        std::size_t min_group_size) {
  const auto adj = graph.adjacency();
  NodeSet all(graph.n_nodes);
  for (std::size_t i = 0; i < graph.n_nodes; ++i) all[i] = i;
  std::vector<NodeSet> cliques;
  NodeSet r;
  bron_kerbosch(r, all, {}, adj, cliques);

  std::erase_if(cliques, [&](const NodeSet& c) {
    return c.size() < std::max<std::size_t>(min_group_size, 2);
  });
  std::sort(cliques.begin(), cliques.end(), [](const NodeSet& a, const NodeSet& b) {
    if (a.front() != b.front()) return a.front() < b.front();
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return cliques;
}

FeaturePortfolio select_representatives(const std::vector<std::vector<std::size_t>>& groups,
                                        const Matrix& x_train, std::span<const double> y_train,
                                        const ForestParams& params) {
  const std::size_t p = x_train.cols();
  std::vector<double> score(p, -1.0);
  auto score_of = [&](std::size_t f) {
    if (score[f] < 0.0) {
      const std::size_t cols[] = {f};
      const Matrix single = x_train.select_columns(cols);
      score[f] = oob_mae(fit(single, y_train, params), single, y_train);
    }
    return score[f];
  };

  FeaturePortfolio portfolio;
  std::vector<char> grouped(p, 0);
  std::vector<char> representative(p, 0);
  for (const auto& members : groups) {
    FeatureGroup group;
    group.members = members;
    std::size_t best = members.front();
    double best_score = 0.0;
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (members[i] >= p) throw ValidationError("feature group references unknown column");
      const double s = score_of(members[i]);
      group.member_oob_mae.push_back(s);
      if (i == 0 || s < best_score || (s == best_score && members[i] < best)) {
        best = members[i];
        best_score = s;
      }
      grouped[members[i]] = 1;
    }
    group.representative = best;
    representative[best] = 1;
    portfolio.groups.push_back(std::move(group));
  }
  for (std::size_t f = 0; f < p; ++f) {
    (!grouped[f] || representative[f] ? portfolio.kept : portfolio.discarded).push_back(f);
  }
  return portfolio;
}

FeaturePortfolio select_features(const Matrix& x_train, std::span<const double> y_train,
                                 const SelectionConfig& config) {
  const CorrelationGraph graph =
      build_correlation_graph(x_train, config.correlation_threshold, config.mode);
  FeaturePortfolio portfolio = select_representatives(
      correlated_groups(graph, config.min_group_size), x_train, y_train, config.forest);

  // Representatives of overlapping groups may still be correlated with each
  // other; that is allowed but worth surfacing.
  std::vector<char> kept(x_train.cols(), 0);
  for (std::size_t f : portfolio.kept) kept[f] = 1;
  for (auto [i, j] : graph.edges) {
    if (kept[i] && kept[j]) {
      warn("features " + std::to_string(i) + " and " + std::to_string(j) +
           " are both kept although correlated (representatives of overlapping groups)");
    }
  }
  return portfolio;
}

nlohmann::ordered_json portfolio_to_json(const FeaturePortfolio& portfolio,
                                         std::span<const std::string> feature_names) {
  auto name = [&](std::size_t f) {
    return f < feature_names.size() ? feature_names[f] : std::to_string(f);
  };
  nlohmann::ordered_json j;
  auto kept = nlohmann::ordered_json::array();
  for (std::size_t f : portfolio.kept) kept.push_back(name(f));
  auto discarded = nlohmann::ordered_json::array();
  for (std::size_t f : portfolio.discarded) discarded.push_back(name(f));
  auto groups = nlohmann::ordered_json::array();
  for (const auto& g : portfolio.groups) {
    nlohmann::ordered_json gj;
    auto members = nlohmann::ordered_json::array();
    for (std::size_t f : g.members) members.push_back(name(f));
    gj["members"] = std::move(members);
    gj["representative"] = name(g.representative);
    gj["member_oob_mae"] = g.member_oob_mae;
    groups.push_back(std::move(gj));
  }
  j["kept"] = std::move(kept);
  j["discarded"] = std::move(discarded);
  j["groups"] = std::move(groups);
  return j;
}

}  // namespace rfclust
