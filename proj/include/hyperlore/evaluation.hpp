#pragma once

#include <Eigen/Core>

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hyperlore/losses.hpp"
#include "hyperlore/solver.hpp"

namespace hyperlore {

// Ground truth for reconstruction: node labels aligned to embedding columns
// plus an undirected edge set. Edges are stored as index pairs (i, j) with
// i < j, sorted and deduplicated; make_reconstruction_graph and the file
// readers enforce that normal form.
struct ReconstructionGraph {
  std::vector<std::string> labels;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> edges;
};

// Builds a graph from label pairs: unknown labels, self-loops and duplicate
// labels are rejected; reversed duplicates collapse to one undirected edge.
ReconstructionGraph make_reconstruction_graph(
    std::vector<std::string> labels,
    const std::vector<std::pair<std::string, std::string>>& edge_labels);

struct MapResult {
  double map = 0.0;
  std::map<std::string, double> per_node_ap;  // nodes with degree >= 1 only
  Eigen::Index nodes_evaluated = 0;
};

struct MapOptions {
  // Default: mean over nodes of each node's average precision. The
  // edge-weighted variant averages precision over all (node, neighbor) pairs
  // instead, which weights high-degree nodes more; kept for sensitivity
  // checks.
  bool edge_weighted = false;
};

// Reconstruction quality of hyperboloid embeddings: for every node with at
// least one edge, true neighbors are ranked by distance against all
// non-neighbors (the node itself excluded), ties broken pessimistically
// (tied non-neighbors count as closer), and the average precision of the
// neighbor set is computed. Deterministic for any thread budget.
MapResult map_score(const Eigen::MatrixXd& embeddings,
                    const ReconstructionGraph& graph,
                    const MapOptions& options = {});

// One row of the rank x method table.
struct SweepRow {
  std::string method;  // "baseline", "svd", "euclid-full", or "hyperbolic"
  Eigen::Index rank;   // n for the baseline row
  double map = 0.0;
  double loss = 0.0;       // the method's own objective at its solution
  double wall_time = 0.0;  // seconds spent producing the factorization
};

// Runs every (rank, kind) combination — the closed-form solver for
// SpatialEuclidean, the trust-region solver (svd-warm start) otherwise — and
// evaluates MAP on the expanded factorization. The first row is the
// uncompressed baseline.
std::vector<SweepRow> map_rank_sweep(const Eigen::MatrixXd& Xbar,
                                     const ReconstructionGraph& graph,
                                     const std::vector<Eigen::Index>& ranks,
                                     const std::vector<LossKind>& kinds,
                                     const TrConfig& cfg);

}  // namespace hyperlore
