#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hyperlore/data_io.hpp"
#include "hyperlore/errors.hpp"
#include "hyperlore/evaluation.hpp"
#include "hyperlore/losses.hpp"
#include "hyperlore/parallel.hpp"
#include "hyperlore/product.hpp"
#include "hyperlore/solver.hpp"
#include "hyperlore/svd.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw hyperlore::IoError("cannot create " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw hyperlore::IoError("failed writing " + path.string());
}

void write_json(const fs::path& path, const ordered_json& j) {
  write_text(path, j.dump(2) + "\n");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find(',', start);
    items.push_back(text.substr(
        start, end == std::string::npos ? std::string::npos : end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return items;
}

struct CompressOpts {
  std::string input;
  std::string model = "hyperboloid";
  std::string method;
  std::string init = "svd-warm";
  std::string out;
  int rank = 0;
  int max_iters = 500;
  double grad_tol = 1e-6;
  double initial_radius = 1.0;
  double max_radius = 100.0;
  std::uint64_t seed = 0;
  bool trace = false;
};

void run_compress(const CompressOpts& o) {
  using namespace hyperlore;
  const EmbeddingModel model = model_from_name(o.model);
  const LossKind kind = method_from_name(o.method);
  const LabeledEmbeddings data = read_embeddings(o.input, model);

  FactoredEmbedding f;
  SolveReport report;
  if (kind == LossKind::SpatialEuclidean) {
    const auto start = std::chrono::steady_clock::now();
    f = solve_svd(data.Xbar, o.rank);
    const ProductPoint y = to_product_point(f);
    report.final_loss = loss_value(kind, y, data.Xbar);
    const ProductTangent g = riemannian_gradient(kind, y, data.Xbar);
    report.final_grad_norm = std::sqrt(product_metric(y, g, g));
    report.loss_trace = {report.final_loss};
    report.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
  } else {
    TrConfig cfg;
    cfg.max_outer_iters = o.max_iters;
    cfg.grad_tol = o.grad_tol;
    cfg.initial_radius = o.initial_radius;
    cfg.max_radius = o.max_radius;
    cfg.seed = o.seed;
    const InitStrategy strategy =
        o.init == "random" ? InitStrategy::Random : InitStrategy::SvdWarm;
    const ProductPoint init = initialize(data.Xbar, o.rank, strategy, o.seed);
    TraceSink sink;
    if (o.trace)
      sink = [](const std::string& line) { std::cerr << line << '\n'; };
    auto [solution, solve_report] =
        tr_solve(kind, data.Xbar, o.rank, init, cfg, std::move(sink));
    f = std::move(solution);
    report = std::move(solve_report);
  }
  f.labels = data.labels;
  write_factorization(f, o.out, o.method, report.final_loss);

  ordered_json j;
  j["method"] = o.method;
  j["rank"] = o.rank;
  j["n"] = static_cast<std::int64_t>(f.U.rows());
  j["m"] = static_cast<std::int64_t>(f.Z.cols());
  j["loss"] = report.final_loss;
  j["final_grad_norm"] = report.final_grad_norm;
  j["iterates"] = report.iterates;
  j["wall_time"] = report.wall_time;
  j["loss_trace"] = report.loss_trace;
  j["accepted_flags"] = report.accepted_flags;
  write_json(fs::path(o.out) / "solve_report.json", j);

  std::printf("wrote %s: method=%s rank=%d loss=%.6e iterations=%d\n",
              o.out.c_str(), o.method.c_str(), o.rank, report.final_loss,
              report.iterates);
}

struct EvaluateOpts {
  std::string embeddings;
  std::string factorization;
  std::string model = "hyperboloid";
  std::string edges;
  std::string out;
  bool edge_weighted = false;
};

void run_evaluate(const EvaluateOpts& o) {
  using namespace hyperlore;
  if (o.embeddings.empty() == o.factorization.empty())
    throw InvalidArgument(
        "pass exactly one of --embeddings and --factorization");

  Eigen::MatrixXd X;
  std::vector<std::string> labels;
  if (!o.embeddings.empty()) {
    LabeledEmbeddings data =
        read_embeddings(o.embeddings, model_from_name(o.model));
    X = std::move(data.Xbar);
    labels = std::move(data.labels);
  } else {
    const FactoredEmbedding f = read_factorization(o.factorization);
    X = expand(f);
    labels = f.labels;
  }
  const ReconstructionGraph graph = read_edges(o.edges, std::move(labels));
  MapOptions options;
  options.edge_weighted = o.edge_weighted;
  const MapResult result = map_score(X, graph, options);

  ordered_json j;
  j["map"] = result.map;
  j["nodes_evaluated"] = static_cast<std::int64_t>(result.nodes_evaluated);
  j["edge_weighted"] = o.edge_weighted;
  ordered_json per_node = ordered_json::object();
  for (const auto& [label, ap] : result.per_node_ap) per_node[label] = ap;
  j["per_node_ap"] = std::move(per_node);
  write_json(o.out, j);

  std::printf("MAP %.4f over %lld nodes\n", result.map,
              static_cast<long long>(result.nodes_evaluated));
}

struct SweepOpts {
  std::string input;
  std::string model = "hyperboloid";
  std::string edges;
  std::string ranks;
  std::string methods;
  std::string out;
  int max_iters = 500;
  double grad_tol = 1e-6;
  std::uint64_t seed = 0;
};

void run_sweep(const SweepOpts& o) {
  using namespace hyperlore;
  std::vector<Eigen::Index> ranks;
  for (const std::string& item : split_list(o.ranks)) {
    const double value = parse_double(item, "--ranks");
    const auto rank = static_cast<Eigen::Index>(value);
    if (static_cast<double>(rank) != value || rank < 1)
      throw InvalidArgument("--ranks: '" + item +
                            "' is not a positive integer");
    ranks.push_back(rank);
  }
  std::vector<LossKind> kinds;
  for (const std::string& item : split_list(o.methods))
    kinds.push_back(method_from_name(item));

  const LabeledEmbeddings data =
      read_embeddings(o.input, model_from_name(o.model));
  const ReconstructionGraph graph = read_edges(o.edges, data.labels);
  TrConfig cfg;
  cfg.max_outer_iters = o.max_iters;
  cfg.grad_tol = o.grad_tol;
  cfg.seed = o.seed;

  const std::vector<SweepRow> rows =
      map_rank_sweep(data.Xbar, graph, ranks, kinds, cfg);

  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec)
    throw IoError("cannot create directory " + o.out + ": " + ec.message());

  std::string tsv = "method\trank\tmap\tloss\n";
  for (const SweepRow& row : rows) {
    tsv += row.method;
    tsv += '\t';
    tsv += std::to_string(row.rank);
    tsv += '\t';
    tsv += format_double(row.map);
    tsv += '\t';
    tsv += format_double(row.loss);
    tsv += '\n';
  }
  write_text(fs::path(o.out) / "sweep.tsv", tsv);

  const std::string dataset = fs::path(o.input).stem().string();
  ordered_json j = ordered_json::array();
  for (const SweepRow& row : rows) {
    ordered_json entry;
    entry["dataset"] = dataset;
    entry["rank"] = static_cast<std::int64_t>(row.rank);
    entry["method"] = row.method;
    entry["map"] = row.map;
    entry["loss"] = row.loss;
    entry["wall_time"] = row.wall_time;
    j.push_back(std::move(entry));
  }
  write_json(fs::path(o.out) / "sweep.json", j);

  std::printf("wrote %zu sweep rows to %s\n", rows.size(), o.out.c_str());
}

struct ConvertOpts {
  std::string input;
  std::string from;
  std::string to;
  std::string out;
};

void run_convert(const ConvertOpts& o) {
  using namespace hyperlore;
  const LabeledEmbeddings data =
      read_embeddings(o.input, model_from_name(o.from));
  write_embeddings(o.out, data.Xbar, data.labels, model_from_name(o.to));
  std::printf("wrote %s (%lld nodes, %s model)\n", o.out.c_str(),
              static_cast<long long>(data.Xbar.cols()), o.to.c_str());
}

struct SynthesizeOpts {
  int branching = 2;
  int depth = 3;
  int ambient_dim = 10;
  double edge_length = 0.0;  // filled with the guaranteed length in main
  int copies = 1;
  std::uint64_t seed = 0;
  std::string out_embeddings;
  std::string out_edges;
};

void run_synthesize(const SynthesizeOpts& o) {
  using namespace hyperlore;
  const SyntheticTree tree =
      synthesize_tree(o.branching, o.depth, o.ambient_dim, o.edge_length,
                      o.seed, o.copies);
  write_embeddings(o.out_embeddings, tree.Xbar, tree.graph.labels,
                   EmbeddingModel::Hyperboloid);
  write_edges(o.out_edges, tree.graph);
  std::printf("synthesized %lld nodes, %zu edges (planted rank %d, gold MAP "
              "%.4f)\n",
              static_cast<long long>(tree.Xbar.cols()), tree.graph.edges.size(),
              tree.planted_rank, tree.gold_map);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Low-rank factorization and reconstruction scoring for hyperbolic "
      "embeddings"};
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads,
                 "worker thread budget (defaults to the hardware count)")
      ->envname("HYPERLORE_THREADS")
      ->check(CLI::PositiveNumber);

  CompressOpts compress;
  CLI::App* c = app.add_subcommand(
      "compress", "Factor embeddings into U, Z and z0 at a given rank");
  c->fallthrough();
  c->add_option("--input", compress.input, "embeddings TSV")->required();
  c->add_option("--model", compress.model, "input model")
      ->check(CLI::IsMember({"hyperboloid", "poincare"}));
  c->add_option("--rank", compress.rank, "target rank r")
      ->required()
      ->check(CLI::PositiveNumber);
  c->add_option("--method", compress.method,
                "svd, euclid-full, or hyperbolic")
      ->required();
  c->add_option("--out", compress.out, "output bundle directory")->required();
  c->add_option("--init", compress.init, "starting point strategy")
      ->check(CLI::IsMember({"svd-warm", "random"}));
  c->add_option("--max-iters", compress.max_iters, "outer iteration cap")
      ->check(CLI::PositiveNumber);
  c->add_option("--grad-tol", compress.grad_tol, "gradient norm stop")
      ->check(CLI::PositiveNumber);
  c->add_option("--initial-radius", compress.initial_radius,
                "starting trust-region radius")
      ->check(CLI::PositiveNumber);
  c->add_option("--max-radius", compress.max_radius,
                "trust-region radius cap")
      ->check(CLI::PositiveNumber);
  c->add_option("--seed", compress.seed, "seed for random initialization");
  c->add_flag("--trace", compress.trace,
              "print per-iteration solver lines to stderr");

  EvaluateOpts evaluate;
  CLI::App* e = app.add_subcommand(
      "evaluate", "Score reconstruction MAP against a ground-truth edge set");
  e->fallthrough();
  CLI::Option* emb =
      e->add_option("--embeddings", evaluate.embeddings, "embeddings TSV");
  CLI::Option* fac = e->add_option("--factorization", evaluate.factorization,
                                   "factorization bundle directory");
  emb->excludes(fac);
  fac->excludes(emb);
  e->add_option("--model", evaluate.model, "embeddings input model")
      ->check(CLI::IsMember({"hyperboloid", "poincare"}));
  e->add_option("--edges", evaluate.edges, "edge list TSV")->required();
  e->add_option("--out", evaluate.out, "output JSON path")->required();
  e->add_flag("--edge-weighted", evaluate.edge_weighted,
              "average precision over edges instead of nodes");

  SweepOpts sweep;
  CLI::App* s = app.add_subcommand(
      "sweep", "Factor at several ranks and methods and tabulate MAP");
  s->fallthrough();
  s->add_option("--input", sweep.input, "embeddings TSV")->required();
  s->add_option("--model", sweep.model, "input model")
      ->check(CLI::IsMember({"hyperboloid", "poincare"}));
  s->add_option("--edges", sweep.edges, "edge list TSV")->required();
  s->add_option("--ranks", sweep.ranks, "comma-separated ranks")->required();
  s->add_option("--methods", sweep.methods, "comma-separated methods")
      ->required();
  s->add_option("--out", sweep.out, "output directory")->required();
  s->add_option("--max-iters", sweep.max_iters, "outer iteration cap")
      ->check(CLI::PositiveNumber);
  s->add_option("--grad-tol", sweep.grad_tol, "gradient norm stop")
      ->check(CLI::PositiveNumber);
  s->add_option("--seed", sweep.seed, "seed for random initialization");

  ConvertOpts convert;
  CLI::App* v = app.add_subcommand(
      "convert", "Rewrite embeddings between the two hyperbolic models");
  v->fallthrough();
  v->add_option("--input", convert.input, "embeddings TSV")->required();
  v->add_option("--from", convert.from, "input model")
      ->required()
      ->check(CLI::IsMember({"hyperboloid", "poincare"}));
  v->add_option("--to", convert.to, "output model")
      ->required()
      ->check(CLI::IsMember({"hyperboloid", "poincare"}));
  v->add_option("--out", convert.out, "output TSV path")->required();

  SynthesizeOpts synthesize;
  synthesize.edge_length = hyperlore::kGuaranteedEdgeLength;
  CLI::App* y = app.add_subcommand(
      "synthesize", "Generate a planted low-rank tree embedding");
  y->fallthrough();
  y->add_option("--branching", synthesize.branching, "children per node")
      ->check(CLI::Range(2, 64));
  y->add_option("--depth", synthesize.depth, "tree depth")
      ->check(CLI::PositiveNumber);
  y->add_option("--ambient-dim", synthesize.ambient_dim,
                "spatial dimension of the output")
      ->check(CLI::PositiveNumber);
  y->add_option("--edge-length", synthesize.edge_length,
                "hyperbolic length of every edge")
      ->check(CLI::PositiveNumber);
  y->add_option("--copies", synthesize.copies,
                "number of disjoint planted trees")
      ->check(CLI::PositiveNumber);
  y->add_option("--seed", synthesize.seed, "rotation seed");
  y->add_option("--out-embeddings", synthesize.out_embeddings,
                "embeddings TSV path")
      ->required();
  y->add_option("--out-edges", synthesize.out_edges, "edge list TSV path")
      ->required();

  try {
    app.parse(argc, argv);
    if (threads > 0) hyperlore::set_thread_budget(threads);
    if (c->parsed()) run_compress(compress);
    if (e->parsed()) run_evaluate(evaluate);
    if (s->parsed()) run_sweep(sweep);
    if (v->parsed()) run_convert(convert);
    if (y->parsed()) run_synthesize(synthesize);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 1;
  } catch (const hyperlore::NumericError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  } catch (const hyperlore::Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "internal error: " << err.what() << '\n';
    return 2;
  }
  return 0;
}
