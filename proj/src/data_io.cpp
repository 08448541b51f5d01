#include "hyperlore/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "json.hpp"

#include "hyperlore/errors.hpp"
#include "hyperlore/hyperbolic.hpp"
#include "hyperlore/stiefel.hpp"

namespace hyperlore {

namespace fs = std::filesystem;

namespace {

struct Line {
  std::string text;
  int number = 0;
};

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return std::move(buffer).str();
}

void write_text_file(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

// Non-empty lines with their 1-based numbers; a trailing '\r' is stripped so
// CRLF files parse too.
std::vector<Line> read_lines(const fs::path& path) {
  const std::string text = read_text_file(path);
  std::vector<Line> lines;
  int number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find('\n', start);
    std::string line = text.substr(
        start, end == std::string::npos ? std::string::npos : end - start);
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back({std::move(line), number});
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return lines;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = line.find('\t', start);
    fields.push_back(line.substr(
        start, end == std::string::npos ? std::string::npos : end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return fields;
}

std::string loc(const fs::path& path, int line) {
  return path.string() + " line " + std::to_string(line);
}

void require_clean_label(const std::string& label, const std::string& what) {
  if (label.empty()) throw InvalidArgument(what + ": empty label");
  if (label.find_first_of("\t\n\r") != std::string::npos)
    throw InvalidArgument(what + ": label '" + label +
                          "' contains tab or newline characters");
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state) {
  for (const unsigned char c : bytes) {
    state ^= c;
    state *= 1099511628211ULL;
  }
  return state;
}

std::string bundle_checksum(std::string_view u_bytes, std::string_view z_bytes,
                            std::string_view z0_bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  h = fnv1a64(u_bytes, h);
  h = fnv1a64(z_bytes, h);
  h = fnv1a64(z0_bytes, h);
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::string matrix_tsv(const Eigen::MatrixXd& matrix) {
  std::string out;
  out.reserve(static_cast<std::size_t>(matrix.size()) * 12);
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      if (j > 0) out += '\t';
      out += format_double(matrix(i, j));
    }
    out += '\n';
  }
  return out;
}

Eigen::MatrixXd parse_matrix_tsv(const fs::path& path, Eigen::Index rows,
                                 Eigen::Index cols) {
  const std::vector<Line> lines = read_lines(path);
  if (static_cast<Eigen::Index>(lines.size()) != rows)
    throw ParseError(path.string() + ": expected " + std::to_string(rows) +
                     " rows, found " + std::to_string(lines.size()));
  Eigen::MatrixXd matrix(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto fields = split_tabs(lines[static_cast<std::size_t>(i)].text);
    if (static_cast<Eigen::Index>(fields.size()) != cols)
      throw ParseError(loc(path, lines[static_cast<std::size_t>(i)].number) +
                       ": expected " + std::to_string(cols) +
                       " values, found " + std::to_string(fields.size()));
    for (Eigen::Index j = 0; j < cols; ++j) {
      matrix(i, j) =
          parse_double(fields[static_cast<std::size_t>(j)],
                       loc(path, lines[static_cast<std::size_t>(i)].number));
    }
  }
  return matrix;
}

}  // namespace

std::string format_double(double v) {
  if (!std::isfinite(v))
    throw NumericError("refusing to serialize a non-finite value");
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, result.ptr);
}

double parse_double(const std::string& field, const std::string& what) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc{} || result.ptr != end)
    throw ParseError(what + ": invalid number '" + field + "'");
  if (!std::isfinite(value))
    throw ParseError(what + ": non-finite value '" + field + "'");
  return value;
}

const char* model_name(EmbeddingModel model) {
  switch (model) {
    case EmbeddingModel::Hyperboloid: return "hyperboloid";
    case EmbeddingModel::Poincare: return "poincare";
  }
  throw InvalidArgument("unknown embedding model");
}

EmbeddingModel model_from_name(const std::string& name) {
  if (name == "hyperboloid") return EmbeddingModel::Hyperboloid;
  if (name == "poincare") return EmbeddingModel::Poincare;
  throw InvalidArgument("unknown embedding model '" + name +
                        "' (expected 'hyperboloid' or 'poincare')");
}

LabeledEmbeddings read_embeddings(const fs::path& path, EmbeddingModel model) {
  const std::vector<Line> lines = read_lines(path);
  if (lines.empty()) throw ParseError(path.string() + ": no data rows");

  std::vector<std::string> labels;
  std::vector<Eigen::VectorXd> coords;
  std::vector<int> line_numbers;
  std::unordered_set<std::string> seen;
  Eigen::Index width = -1;

  for (const Line& line : lines) {
    const auto fields = split_tabs(line.text);
    if (fields.size() < 2)
      throw ParseError(loc(path, line.number) +
                       ": expected a label and at least one coordinate");
    const std::string& label = fields[0];
    if (label.empty())
      throw ParseError(loc(path, line.number) + ": empty label");
    if (!seen.insert(label).second)
      throw ParseError(loc(path, line.number) + ": duplicate label '" + label +
                       "'");
    const auto w = static_cast<Eigen::Index>(fields.size()) - 1;
    if (width < 0) {
      width = w;
    } else if (w != width) {
      throw ParseError(loc(path, line.number) + ": expected " +
                       std::to_string(width) + " coordinates, found " +
                       std::to_string(w));
    }
    Eigen::VectorXd v(w);
    for (Eigen::Index j = 0; j < w; ++j)
      v(j) = parse_double(fields[static_cast<std::size_t>(j) + 1],
                          loc(path, line.number));
    labels.push_back(label);
    coords.push_back(std::move(v));
    line_numbers.push_back(line.number);
  }

  const auto m = static_cast<Eigen::Index>(coords.size());
  LabeledEmbeddings out;
  out.labels = std::move(labels);

  if (model == EmbeddingModel::Poincare) {
    out.Xbar.resize(width + 1, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const Eigen::VectorXd& w = coords[static_cast<std::size_t>(j)];
      if (!in_poincare_ball(w))
        throw ConstraintViolation(
            "node '" + out.labels[static_cast<std::size_t>(j)] + "' (" +
            loc(path, line_numbers[static_cast<std::size_t>(j)]) +
            "): coordinates leave the open unit ball");
      out.Xbar.col(j) = poincare_to_hyperboloid(w);
    }
  } else {
    if (width < 2)
      throw ParseError(path.string() +
                       ": hyperboloid rows need at least two coordinates");
    out.Xbar.resize(width, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const Eigen::VectorXd& v = coords[static_cast<std::size_t>(j)];
      if (!is_on_hyperboloid(v))
        throw ConstraintViolation(
            "node '" + out.labels[static_cast<std::size_t>(j)] + "' (" +
            loc(path, line_numbers[static_cast<std::size_t>(j)]) +
            "): not on the hyperboloid");
      out.Xbar.col(j) = v;
    }
  }
  return out;
}

void write_embeddings(const fs::path& path, const Eigen::MatrixXd& Xbar,
                      const std::vector<std::string>& labels,
                      EmbeddingModel model) {
  if (static_cast<Eigen::Index>(labels.size()) != Xbar.cols())
    throw DimensionError("write_embeddings: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(Xbar.cols()) +
                         " columns");
  std::unordered_set<std::string> seen;
  for (const std::string& label : labels) {
    require_clean_label(label, "write_embeddings");
    if (!seen.insert(label).second)
      throw InvalidArgument("write_embeddings: duplicate label '" + label +
                            "'");
  }
  require_hyperboloid_columns(Xbar, "write_embeddings");

  std::string out;
  out.reserve(static_cast<std::size_t>(Xbar.size()) * 12);
  for (Eigen::Index j = 0; j < Xbar.cols(); ++j) {
    out += labels[static_cast<std::size_t>(j)];
    if (model == EmbeddingModel::Hyperboloid) {
      for (Eigen::Index i = 0; i < Xbar.rows(); ++i) {
        out += '\t';
        out += format_double(Xbar(i, j));
      }
    } else {
      const Eigen::VectorXd w = hyperboloid_to_poincare(Xbar.col(j).eval());
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        out += '\t';
        out += format_double(w(i));
      }
    }
    out += '\n';
  }
  write_text_file(path, out);
}

ReconstructionGraph read_edges(const fs::path& path,
                               std::vector<std::string> labels) {
  std::unordered_map<std::string, Eigen::Index> index;
  index.reserve(labels.size());
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(labels.size()); ++i) {
    const auto [it, inserted] = index.emplace(labels[static_cast<std::size_t>(i)], i);
    if (!inserted)
      throw InvalidArgument("read_edges: duplicate label '" +
                            labels[static_cast<std::size_t>(i)] + "'");
  }

  ReconstructionGraph graph;
  graph.labels = std::move(labels);
  for (const Line& line : read_lines(path)) {
    const auto fields = split_tabs(line.text);
    if (fields.size() != 2)
      throw ParseError(loc(path, line.number) +
                       ": expected exactly two labels");
    const auto a = index.find(fields[0]);
    if (a == index.end())
      throw ParseError(loc(path, line.number) + ": unknown label '" +
                       fields[0] + "'");
    const auto b = index.find(fields[1]);
    if (b == index.end())
      throw ParseError(loc(path, line.number) + ": unknown label '" +
                       fields[1] + "'");
    if (a->second == b->second)
      throw ParseError(loc(path, line.number) + ": self-loop on '" +
                       fields[0] + "'");
    graph.edges.emplace_back(std::min(a->second, b->second),
                             std::max(a->second, b->second));
  }
  std::sort(graph.edges.begin(), graph.edges.end());
  graph.edges.erase(std::unique(graph.edges.begin(), graph.edges.end()),
                    graph.edges.end());
  return graph;
}

void write_edges(const fs::path& path, const ReconstructionGraph& graph) {
  const auto m = static_cast<Eigen::Index>(graph.labels.size());
  for (const std::string& label : graph.labels)
    require_clean_label(label, "write_edges");
  std::string out;
  for (const auto& [a, b] : graph.edges) {
    if (a < 0 || b < 0 || a >= m || b >= m)
      throw DimensionError("write_edges: edge index out of range");
    out += graph.labels[static_cast<std::size_t>(a)];
    out += '\t';
    out += graph.labels[static_cast<std::size_t>(b)];
    out += '\n';
  }
  write_text_file(path, out);
}

void write_factorization(const FactoredEmbedding& f, const fs::path& dir,
                         const std::string& method, double loss) {
  validate_factored(f, /*require_labels=*/true);
  method_from_name(method);  // rejects unknown method names
  if (!std::isfinite(loss))
    throw InvalidArgument("write_factorization: loss must be finite");
  for (const std::string& label : f.labels)
    require_clean_label(label, "write_factorization");

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw IoError("cannot create directory " + dir.string() + ": " +
                  ec.message());

  const std::string u_bytes = matrix_tsv(f.U);
  const std::string z_bytes = matrix_tsv(f.Z);
  const std::string z0_bytes = matrix_tsv(f.z0.transpose());

  nlohmann::ordered_json manifest;
  manifest["n"] = static_cast<std::int64_t>(f.U.rows());
  manifest["m"] = static_cast<std::int64_t>(f.Z.cols());
  manifest["r"] = static_cast<std::int64_t>(f.U.cols());
  manifest["method"] = method;
  manifest["loss"] = loss;
  manifest["checksum"] = bundle_checksum(u_bytes, z_bytes, z0_bytes);

  std::string labels_text;
  for (const std::string& label : f.labels) {
    labels_text += label;
    labels_text += '\n';
  }

  write_text_file(dir / "U.tsv", u_bytes);
  write_text_file(dir / "Z.tsv", z_bytes);
  write_text_file(dir / "z0.tsv", z0_bytes);
  write_text_file(dir / "labels.txt", labels_text);
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

FactoredEmbedding read_factorization(const fs::path& dir,
                                     FactorizationInfo* info) {
  const fs::path manifest_path = dir / "manifest.json";
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_text_file(manifest_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(manifest_path.string() + ": " + e.what());
  }

  FactorizationInfo parsed;
  try {
    parsed.n = manifest.at("n").get<std::int64_t>();
    parsed.m = manifest.at("m").get<std::int64_t>();
    parsed.r = manifest.at("r").get<std::int64_t>();
    parsed.method = manifest.at("method").get<std::string>();
    parsed.loss = manifest.at("loss").get<double>();
    parsed.checksum = manifest.at("checksum").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(manifest_path.string() +
                     ": missing or invalid field: " + e.what());
  }
  if (parsed.n < 1 || parsed.m < 1 || parsed.r < 1)
    throw ParseError(manifest_path.string() +
                     ": n, m and r must be positive");
  try {
    method_from_name(parsed.method);
  } catch (const InvalidArgument&) {
    throw ParseError(manifest_path.string() + ": unknown method '" +
                     parsed.method + "'");
  }

  const std::string u_bytes = read_text_file(dir / "U.tsv");
  const std::string z_bytes = read_text_file(dir / "Z.tsv");
  const std::string z0_bytes = read_text_file(dir / "z0.tsv");
  const std::string computed = bundle_checksum(u_bytes, z_bytes, z0_bytes);
  if (computed != parsed.checksum)
    throw IoError(dir.string() + ": checksum mismatch (manifest records " +
                  parsed.checksum + ", files hash to " + computed + ")");

  FactoredEmbedding f;
  f.U = parse_matrix_tsv(dir / "U.tsv", parsed.n, parsed.r);
  f.Z = parse_matrix_tsv(dir / "Z.tsv", parsed.r, parsed.m);
  f.z0 = parse_matrix_tsv(dir / "z0.tsv", 1, parsed.m).row(0).transpose();

  const fs::path labels_path = dir / "labels.txt";
  std::unordered_set<std::string> seen;
  for (const Line& line : read_lines(labels_path)) {
    if (!seen.insert(line.text).second)
      throw ParseError(loc(labels_path, line.number) + ": duplicate label '" +
                       line.text + "'");
    f.labels.push_back(line.text);
  }
  if (static_cast<Eigen::Index>(f.labels.size()) != parsed.m)
    throw ParseError(labels_path.string() + ": expected " +
                     std::to_string(parsed.m) + " labels, found " +
                     std::to_string(f.labels.size()));

  validate_factored(f, /*require_labels=*/true);
  if (info) *info = parsed;
  return f;
}

const double kGuaranteedEdgeLength = 2.0 * std::acosh(3.0);

SyntheticTree synthesize_tree(int branching, int depth,
                              Eigen::Index ambient_dim, double edge_length,
                              std::uint64_t seed, int copies) {
  if (branching < 2) throw InvalidArgument("branching must be at least 2");
  if (depth < 1) throw InvalidArgument("depth must be at least 1");
  if (copies < 1) throw InvalidArgument("copies must be at least 1");
  if (!std::isfinite(edge_length) || edge_length <= 0.0)
    throw InvalidArgument("edge length must be positive and finite");
  if (ambient_dim < 2 * copies)
    throw InvalidArgument("ambient dimension must be at least 2 * copies = " +
                          std::to_string(2 * copies));
  // Copies occupy pairwise orthogonal coordinate 2-planes, each translated
  // outward along its own plane. Disjoint spatial support makes the distance
  // between nodes of different copies acosh(x0 * y0), so pushing every node
  // to radius at least (edge_length + 1) / 2 keeps all cross-copy distances
  // above edge_length while adding as little radius as possible: radius
  // drives the cancellation error of downstream Lorentz products, and a
  // larger per-copy offset would corrupt the within-copy distances that
  // reconstruction depends on.
  const double offset =
      copies > 1
          ? static_cast<double>(depth) * edge_length + 0.5 * (edge_length + 1.0)
          : 0.0;
  const double max_radius =
      static_cast<double>(depth) * edge_length + offset;
  if (std::tanh(0.5 * max_radius) >= 1.0 - 1e-11)
    throw InvalidArgument(
        "a node radius of " + std::to_string(max_radius) +
        " leaves the representable ball; reduce depth, copies or edge "
        "length");

  std::int64_t per_copy = 1;
  std::int64_t layer = 1;
  for (int d = 0; d < depth; ++d) {
    layer *= branching;
    per_copy += layer;
    if (per_copy * copies > 20000)
      throw InvalidArgument(
          "node count exceeds the supported maximum of 20000");
  }
  const auto t = static_cast<Eigen::Index>(per_copy);
  const Eigen::Index m = t * copies;

  // Lay one tree out in the unit disk: every node fans its children out at
  // equal angles 2*pi/(branching + 1) around the inherited parent direction,
  // each at hyperbolic distance edge_length.
  const auto mobius = [](std::complex<double> a, std::complex<double> z) {
    return (z + a) / (1.0 + std::conj(a) * z);
  };
  const double rho = std::tanh(0.5 * edge_length);
  const double slot = 2.0 * std::numbers::pi / (branching + 1);

  std::vector<std::complex<double>> pos(static_cast<std::size_t>(t));
  std::vector<Eigen::Index> parent(static_cast<std::size_t>(t), -1);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> copy_edges;
  copy_edges.reserve(static_cast<std::size_t>(t) - 1);

  pos[0] = 0.0;
  Eigen::Index next = 1;
  std::vector<Eigen::Index> frontier{0};
  for (int level = 0; level < depth; ++level) {
    std::vector<Eigen::Index> next_frontier;
    next_frontier.reserve(frontier.size() * static_cast<std::size_t>(branching));
    for (const Eigen::Index u : frontier) {
      const std::complex<double> p = pos[static_cast<std::size_t>(u)];
      double base = 0.0;
      if (parent[static_cast<std::size_t>(u)] >= 0) {
        const std::complex<double> toward_parent = mobius(
            -p, pos[static_cast<std::size_t>(parent[static_cast<std::size_t>(u)])]);
        base = std::arg(toward_parent);
      }
      for (int k = 1; k <= branching; ++k) {
        const std::complex<double> child =
            mobius(p, std::polar(rho, base + slot * k));
        pos[static_cast<std::size_t>(next)] = child;
        parent[static_cast<std::size_t>(next)] = u;
        copy_edges.emplace_back(u, next);
        next_frontier.push_back(next);
        ++next;
      }
    }
    frontier = std::move(next_frontier);
  }

  Eigen::MatrixXd plane(3, t);
  for (Eigen::Index i = 0; i < t; ++i) {
    Eigen::Vector2d w(pos[static_cast<std::size_t>(i)].real(),
                      pos[static_cast<std::size_t>(i)].imag());
    plane.col(i) = poincare_to_hyperboloid(w);
  }

  Eigen::MatrixXd Xbar = Eigen::MatrixXd::Zero(ambient_dim + 1, m);
  const double ch = std::cosh(offset);
  const double sh = std::sinh(offset);
  for (int c = 0; c < copies; ++c) {
    for (Eigen::Index i = 0; i < t; ++i) {
      const Eigen::Index col = static_cast<Eigen::Index>(c) * t + i;
      Xbar(0, col) = ch * plane(0, i) + sh * plane(1, i);
      Xbar(1 + 2 * c, col) = sh * plane(0, i) + ch * plane(1, i);
      Xbar(2 + 2 * c, col) = plane(2, i);
    }
  }

  const Eigen::MatrixXd rotation =
      random_stiefel(ambient_dim, ambient_dim, seed).matrix();
  Xbar.bottomRows(ambient_dim) = rotation * Xbar.bottomRows(ambient_dim);

  SyntheticTree tree;
  tree.Xbar = std::move(Xbar);
  tree.planted_rank = 2 * copies;
  tree.graph.labels.reserve(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i)
    tree.graph.labels.push_back("v" + std::to_string(i));
  for (int c = 0; c < copies; ++c) {
    const Eigen::Index offset = static_cast<Eigen::Index>(c) * t;
    for (const auto& [a, b] : copy_edges)
      tree.graph.edges.emplace_back(offset + a, offset + b);
  }
  std::sort(tree.graph.edges.begin(), tree.graph.edges.end());

  tree.gold_map = map_score(tree.Xbar, tree.graph).map;
  // With several copies the guarantee stops at depth 2: deeper multi-copy
  // trees put nodes far enough out that the rounding error of the Lorentz
  // products becomes comparable to the distance gaps reconstruction relies
  // on, so a perfect score can no longer be promised.
  if (edge_length >= kGuaranteedEdgeLength - 1e-12 && depth <= 4 &&
      branching <= 3 && (copies == 1 || depth <= 2) && tree.gold_map != 1.0)
    throw NumericError(
        "synthetic tree failed its perfect-reconstruction guarantee "
        "(gold MAP = " +
        std::to_string(tree.gold_map) + ")");
  return tree;
}

}  // namespace hyperlore
