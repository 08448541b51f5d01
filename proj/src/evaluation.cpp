#include "hyperlore/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "hyperlore/errors.hpp"
#include "hyperlore/parallel.hpp"
#include "hyperlore/product.hpp"
#include "hyperlore/svd.hpp"

namespace hyperlore {

namespace {

std::unordered_map<std::string, Eigen::Index> label_index(
    const std::vector<std::string>& labels) {
  std::unordered_map<std::string, Eigen::Index> index;
  index.reserve(labels.size());
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(labels.size()); ++i) {
    const auto [it, inserted] = index.emplace(labels[i], i);
    if (!inserted)
      throw InvalidArgument("duplicate node label '" + labels[i] + "'");
  }
  return index;
}

void normalize_edges(std::vector<std::pair<Eigen::Index, Eigen::Index>>& edges) {
  for (auto& [a, b] : edges) {
    if (a > b) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

}  // namespace

ReconstructionGraph make_reconstruction_graph(
    std::vector<std::string> labels,
    const std::vector<std::pair<std::string, std::string>>& edge_labels) {
  const auto index = label_index(labels);
  ReconstructionGraph graph;
  graph.labels = std::move(labels);
  graph.edges.reserve(edge_labels.size());
  for (const auto& [a, b] : edge_labels) {
    const auto ia = index.find(a);
    if (ia == index.end()) throw InvalidArgument("unknown node label '" + a + "'");
    const auto ib = index.find(b);
    if (ib == index.end()) throw InvalidArgument("unknown node label '" + b + "'");
    if (ia->second == ib->second)
      throw InvalidArgument("self-loop on node '" + a + "'");
    graph.edges.emplace_back(ia->second, ib->second);
  }
  normalize_edges(graph.edges);
  return graph;
}

MapResult map_score(const Eigen::MatrixXd& embeddings,
                    const ReconstructionGraph& graph,
                    const MapOptions& options) {
  const Eigen::Index m = embeddings.cols();
  if (static_cast<Eigen::Index>(graph.labels.size()) != m)
    throw DimensionError("graph has " + std::to_string(graph.labels.size()) +
                         " labels but embeddings have " + std::to_string(m) +
                         " columns");
  if (graph.edges.empty())
    throw InvalidArgument("cannot score reconstruction: edge set is empty");
  require_hyperboloid_columns(embeddings, "map_score embeddings");

  std::vector<std::vector<Eigen::Index>> neighbors(m);
  for (const auto& [a, b] : graph.edges) {
    if (a < 0 || b < 0 || a >= m || b >= m)
      throw DimensionError("edge index out of range");
    if (a == b) throw InvalidArgument("self-loop in edge set");
    neighbors[a].push_back(b);
    neighbors[b].push_back(a);
  }
  for (auto& nb : neighbors) std::sort(nb.begin(), nb.end());

  std::vector<double> node_ap(m, 0.0);
  std::vector<double> node_precision_sum(m, 0.0);

  parallel_for(0, m, [&](std::ptrdiff_t u) {
    const auto& nb = neighbors[u];
    if (nb.empty()) return;
    const auto k = static_cast<Eigen::Index>(nb.size());

    // c_w = -<x_u, x_w>_L = cosh d(u, w) before clamping; ranking by the
    // clamped value reproduces the distance ranking exactly, ties included.
    Eigen::VectorXd flipped = embeddings.col(u);
    flipped(0) = -flipped(0);
    Eigen::VectorXd c = -(embeddings.transpose() * flipped);
    c = c.cwiseMax(1.0);

    std::vector<double> rivals;
    rivals.reserve(static_cast<std::size_t>(m - 1 - k));
    for (Eigen::Index w = 0; w < m; ++w) {
      if (w == u || std::binary_search(nb.begin(), nb.end(), w)) continue;
      rivals.push_back(c(w));
    }
    std::sort(rivals.begin(), rivals.end());

    std::vector<double> neighbor_c;
    neighbor_c.reserve(nb.size());
    for (const Eigen::Index v : nb) neighbor_c.push_back(c(v));
    std::sort(neighbor_c.begin(), neighbor_c.end());

    double precision_sum = 0.0;
    for (Eigen::Index j = 1; j <= k; ++j) {
      // Pessimistic rank among non-neighbors: ties count against us, hence
      // upper_bound (non-neighbors at equal distance are placed ahead).
      const auto ahead = std::upper_bound(rivals.begin(), rivals.end(),
                                          neighbor_c[static_cast<std::size_t>(j - 1)]) -
                         rivals.begin();
      const double rank = static_cast<double>(ahead) + 1.0;
      precision_sum +=
          static_cast<double>(j) / (rank + static_cast<double>(j) - 1.0);
    }
    node_ap[u] = precision_sum / static_cast<double>(k);
    node_precision_sum[u] = precision_sum;
  });

  MapResult result;
  double ap_sum = 0.0;
  double precision_sum = 0.0;
  std::size_t edge_endpoints = 0;
  for (Eigen::Index u = 0; u < m; ++u) {
    if (neighbors[u].empty()) continue;
    ++result.nodes_evaluated;
    ap_sum += node_ap[u];
    precision_sum += node_precision_sum[u];
    edge_endpoints += neighbors[u].size();
    result.per_node_ap.emplace(graph.labels[static_cast<std::size_t>(u)],
                               node_ap[u]);
  }
  result.map = options.edge_weighted
                   ? precision_sum / static_cast<double>(edge_endpoints)
                   : ap_sum / static_cast<double>(result.nodes_evaluated);
  return result;
}

std::vector<SweepRow> map_rank_sweep(const Eigen::MatrixXd& Xbar,
                                     const ReconstructionGraph& graph,
                                     const std::vector<Eigen::Index>& ranks,
                                     const std::vector<LossKind>& kinds,
                                     const TrConfig& cfg) {
  const Eigen::Index n = Xbar.rows() - 1;
  const Eigen::Index m = Xbar.cols();
  if (ranks.empty()) throw InvalidArgument("rank list is empty");
  if (kinds.empty()) throw InvalidArgument("method list is empty");
  for (const Eigen::Index r : ranks) {
    if (r < 1 || r > n)
      throw InvalidArgument("rank " + std::to_string(r) +
                            " outside [1, " + std::to_string(n) + "]");
  }
  validate(cfg);

  std::vector<SweepRow> rows;
  rows.reserve(1 + ranks.size() * kinds.size());

  SweepRow baseline;
  baseline.method = "baseline";
  baseline.rank = n;
  baseline.map = map_score(Xbar, graph).map;
  rows.push_back(baseline);

  using clock = std::chrono::steady_clock;
  for (const Eigen::Index r : ranks) {
    for (const LossKind kind : kinds) {
      SweepRow row;
      row.method = method_name(kind);
      row.rank = r;
      const auto start = clock::now();
      FactoredEmbedding factored;
      if (kind == LossKind::SpatialEuclidean) {
        if (r > std::min(n, m))
          throw InvalidArgument("rank " + std::to_string(r) +
                                " exceeds min(n, m) = " +
                                std::to_string(std::min(n, m)) +
                                " for the closed-form method");
        factored = solve_svd(Xbar, r);
        row.loss = loss_value(kind, to_product_point(factored), Xbar);
      } else {
        const ProductPoint init = initialize(Xbar, r, InitStrategy::SvdWarm, cfg.seed);
        auto [solution, report] = tr_solve(kind, Xbar, r, init, cfg);
        factored = std::move(solution);
        row.loss = report.final_loss;
      }
      row.wall_time =
          std::chrono::duration<double>(clock::now() - start).count();
      row.map = map_score(expand(factored), graph).map;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace hyperlore
