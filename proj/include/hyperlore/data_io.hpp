#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hyperlore/evaluation.hpp"
#include "hyperlore/product.hpp"

namespace hyperlore {

enum class EmbeddingModel { Hyperboloid, Poincare };

const char* model_name(EmbeddingModel model);
EmbeddingModel model_from_name(const std::string& name);

struct LabeledEmbeddings {
  Eigen::MatrixXd Xbar;             // (n+1) x m, hyperboloid columns
  std::vector<std::string> labels;  // m unique node labels
};

// TSV, one node per line: label, then tab-separated coordinates. Poincare
// files carry n ball coordinates per node and are lifted onto the
// hyperboloid; hyperboloid files carry n+1 coordinates and are validated
// as-is. Malformed lines, non-finite values, inconsistent widths, duplicate
// labels and constraint violations are rejected with the offending line.
LabeledEmbeddings read_embeddings(const std::filesystem::path& path,
                                  EmbeddingModel model);
void write_embeddings(const std::filesystem::path& path,
                      const Eigen::MatrixXd& Xbar,
                      const std::vector<std::string>& labels,
                      EmbeddingModel model);

// TSV, one undirected edge per line as two node labels. Reversed duplicates
// collapse to one edge; unknown labels and self-loops are rejected with the
// offending line. The labels argument fixes the node order of the graph.
ReconstructionGraph read_edges(const std::filesystem::path& path,
                               std::vector<std::string> labels);
void write_edges(const std::filesystem::path& path,
                 const ReconstructionGraph& graph);

struct FactorizationInfo {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  Eigen::Index r = 0;
  std::string method;
  double loss = 0.0;
  std::string checksum;
};

// Factorization bundle: a directory holding U.tsv (n x r), Z.tsv (r x m),
// z0.tsv (1 x m), labels.txt (one label per line) and manifest.json with
// {n, m, r, method, loss, checksum}. The checksum is FNV-1a 64 over the
// bytes of U.tsv, Z.tsv and z0.tsv in that order; read_factorization
// recomputes it and rejects mismatches.
void write_factorization(const FactoredEmbedding& f,
                         const std::filesystem::path& dir,
                         const std::string& method, double loss);
FactoredEmbedding read_factorization(const std::filesystem::path& dir,
                                     FactorizationInfo* info = nullptr);

struct SyntheticTree {
  Eigen::MatrixXd Xbar;  // (ambient_dim + 1) x m hyperboloid columns
  ReconstructionGraph graph;
  int planted_rank = 0;  // spatial rank by construction: 2 * copies
  double gold_map = 0.0; // MAP of the exact embeddings
};

// Edge length from which the generator guarantees perfect reconstruction
// (gold MAP exactly 1) for branching <= 3 and depth <= 4 with one copy, or
// depth <= 2 with several copies: 2 * acosh(3). Deeper multi-copy trees are
// still generated but their gold MAP is reported as measured; the node radii
// they need push the rounding error of Lorentz products up to the distance
// gaps a perfect score depends on.
extern const double kGuaranteedEdgeLength;

// Plants `copies` disjoint complete trees of the given branching and depth
// in the hyperboloid of the given ambient dimension. Each tree is laid out
// in its own 2-plane with uniform edge length (children fan out evenly
// around each node), copies are translated apart so cross-copy distances
// exceed the edge length, and a seeded random rotation mixes the
// coordinates. The spatial block has rank exactly 2 * copies. Node labels
// are v0, v1, ... in copy-major, breadth-first order.
SyntheticTree synthesize_tree(int branching, int depth,
                              Eigen::Index ambient_dim, double edge_length,
                              std::uint64_t seed, int copies = 1);

// Shortest decimal form that parses back to the same double; used by every
// writer so that write/read round-trips are exact.
std::string format_double(double v);
double parse_double(const std::string& field, const std::string& what);

}  // namespace hyperlore
