#pragma once

#include "bngc/core.hpp"
#include "bngc/enrich.hpp"
#include "bngc/spectral.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <unordered_set>
#include <vector>

namespace bngc {

namespace io_detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out(s.substr(b, e - b));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') quoted = !quoted;
    if (c == ',' && !quoted) {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    lines.push_back(line);
  }
  return lines;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (*b == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e;
}

inline std::string fmt(double v, int digits = 10) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string xml_unescape(std::string s) {
  const std::pair<const char*, const char*> table[] = {{"&lt;", "<"}, {"&gt;", ">"}, {"&quot;", "\""}, {"&amp;", "&"}};
  for (const auto& [from, to] : table) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
      s.replace(pos, std::strlen(from), to);
      pos += std::strlen(to);
    }
  }
  return s;
}

}  // namespace io_detail

/// Writes `content` to `path`, creating parent directories.
inline void write_text(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << content;
  if (!out) throw InputError("failed writing " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Samples-by-variables CSV with a header row of variable names.
inline DataMatrix parse_data_csv(const std::vector<std::string>& lines, const std::string& source = "input") {
  if (lines.empty()) throw InputError(source + ": empty file");
  DataMatrix d;
  d.names = io_detail::split_csv_line(lines[0]);
  std::unordered_set<std::string> seen;
  for (const auto& name : d.names) {
    if (name.empty()) throw InputError(source + ": empty variable name in header");
    if (!seen.insert(name).second) throw InputError(source + ": duplicate variable name '" + name + "'");
  }
  if (lines.size() < 2) throw InputError(source + ": no samples");
  const auto p = static_cast<Eigen::Index>(d.names.size());
  d.values.resize(static_cast<Eigen::Index>(lines.size() - 1), p);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = io_detail::split_csv_line(lines[r]);
    if (static_cast<Eigen::Index>(cells.size()) != p)
      throw InputError(source + ": row " + std::to_string(r) + " has " + std::to_string(cells.size()) +
                       " fields, expected " + std::to_string(p));
    for (Eigen::Index c = 0; c < p; ++c) {
      double v = 0.0;
      const auto& cell = cells[static_cast<std::size_t>(c)];
      if (!io_detail::parse_double(cell, v))
        throw InputError(source + ": non-numeric value '" + cell + "' at row " + std::to_string(r) + ", column '" +
                         d.names[static_cast<std::size_t>(c)] + "'");
      if (!std::isfinite(v))
        throw InputError(source + ": non-finite value '" + cell + "' at row " + std::to_string(r) + ", column '" +
                         d.names[static_cast<std::size_t>(c)] + "'");
      d.values(static_cast<Eigen::Index>(r - 1), c) = v;
    }
  }
  return d;
}

inline DataMatrix load_data(const std::filesystem::path& path) {
  return parse_data_csv(io_detail::read_lines(path), path.string());
}

inline std::string data_csv(const DataMatrix& d) {
  std::string s;
  for (std::size_t j = 0; j < d.names.size(); ++j) s += (j ? "," : "") + d.names[j];
  s += '\n';
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    for (Eigen::Index j = 0; j < d.p(); ++j) s += (j ? "," : "") + io_detail::fmt(d.values(i, j), 17);
    s += '\n';
  }
  return s;
}

/// Square matrix with variable names on both axes.
inline std::string matrix_csv(const Matrix& M, const std::vector<std::string>& names) {
  if (static_cast<Eigen::Index>(names.size()) != M.rows() || M.rows() != M.cols())
    throw InputError("matrix_csv: names do not match matrix shape");
  std::string s = "variable";
  for (const auto& n : names) s += "," + n;
  s += '\n';
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    s += names[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < M.cols(); ++j) s += "," + io_detail::fmt(M(i, j));
    s += '\n';
  }
  return s;
}

/// Reads a square labelled matrix written by matrix_csv.
inline WeightedAdjacency parse_matrix_csv(const std::vector<std::string>& lines, const std::string& source = "input") {
  if (lines.empty()) throw InputError(source + ": empty file");
  auto header = io_detail::split_csv_line(lines[0]);
  if (header.size() < 2) throw InputError(source + ": matrix header needs at least one variable");
  WeightedAdjacency a;
  a.names.assign(header.begin() + 1, header.end());
  const auto p = static_cast<Eigen::Index>(a.names.size());
  if (static_cast<Eigen::Index>(lines.size()) - 1 != p) throw InputError(source + ": matrix is not square");
  a.W.resize(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto cells = io_detail::split_csv_line(lines[static_cast<std::size_t>(i + 1)]);
    if (static_cast<Eigen::Index>(cells.size()) != p + 1)
      throw InputError(source + ": row " + std::to_string(i + 1) + " has the wrong number of fields");
    if (cells[0] != a.names[static_cast<std::size_t>(i)])
      throw InputError(source + ": row label '" + cells[0] + "' does not match the header");
    for (Eigen::Index j = 0; j < p; ++j)
      if (!io_detail::parse_double(cells[static_cast<std::size_t>(j + 1)], a.W(i, j)) || !std::isfinite(a.W(i, j)))
        throw InputError(source + ": bad value at row " + std::to_string(i + 1) + ", column " + std::to_string(j + 1));
  }
  return a;
}

inline WeightedAdjacency load_matrix_csv(const std::filesystem::path& path) {
  return parse_matrix_csv(io_detail::read_lines(path), path.string());
}

/// Two-column spectrum: 1-based index, eigenvalue.
inline std::string spectrum_csv(const Vector& eigenvalues) {
  std::string s = "index,eigenvalue\n";
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
    s += std::to_string(i + 1) + "," + io_detail::fmt(eigenvalues(i)) + '\n';
  return s;
}

/// Rows are variables, columns the embedding coordinates.
inline std::string embedding_csv(const Embedding& e) {
  std::string s = "variable";
  for (int c = 0; c < e.dim; ++c) s += ",v" + std::to_string(c + 1);
  s += '\n';
  for (Eigen::Index i = 0; i < e.Y.rows(); ++i) {
    s += i < static_cast<Eigen::Index>(e.names.size()) ? e.names[static_cast<std::size_t>(i)] : std::to_string(i + 1);
    for (Eigen::Index c = 0; c < e.Y.cols(); ++c) s += "," + io_detail::fmt(e.Y(i, c), 17);
    s += '\n';
  }
  return s;
}

inline Embedding parse_embedding_csv(const std::vector<std::string>& lines, const std::string& source = "input") {
  if (lines.size() < 2) throw InputError(source + ": embedding needs a header and at least one row");
  const auto header = io_detail::split_csv_line(lines[0]);
  Embedding e;
  e.dim = static_cast<int>(header.size()) - 1;
  if (e.dim < 1) throw InputError(source + ": embedding has no coordinates");
  e.Y.resize(static_cast<Eigen::Index>(lines.size() - 1), e.dim);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = io_detail::split_csv_line(lines[r]);
    if (static_cast<int>(cells.size()) != e.dim + 1) throw InputError(source + ": ragged row " + std::to_string(r));
    e.names.push_back(cells[0]);
    for (int c = 0; c < e.dim; ++c)
      if (!io_detail::parse_double(cells[static_cast<std::size_t>(c + 1)], e.Y(static_cast<Eigen::Index>(r - 1), c)))
        throw InputError(source + ": non-numeric value at row " + std::to_string(r));
  }
  return e;
}

inline Embedding load_embedding_csv(const std::filesystem::path& path) {
  return parse_embedding_csv(io_detail::read_lines(path), path.string());
}

/// (variable, label) with 1-based labels.
inline std::string clustering_csv(const Clustering& c, const std::vector<std::string>& names) {
  if (names.size() != c.size()) throw InputError("clustering_csv: names and labels differ in length");
  std::string s = "variable,label\n";
  for (std::size_t i = 0; i < names.size(); ++i) s += names[i] + "," + std::to_string(c.labels[i] + 1) + '\n';
  return s;
}

inline nlohmann::json clustering_sidecar(const Clustering& c, const nlohmann::json& config, std::uint64_t seed) {
  return {{"method", c.method}, {"k", c.k},         {"objective", c.objective},
          {"sizes", c.cluster_sizes()}, {"config", config}, {"seed", seed}};
}

struct LabelledClustering {
  std::vector<std::string> names;
  Clustering clustering;
};

inline LabelledClustering parse_clustering_csv(const std::vector<std::string>& lines, const std::string& source = "input") {
  if (lines.empty()) throw InputError(source + ": empty file");
  LabelledClustering out;
  std::vector<int> labels;
  std::size_t start = 0;
  {
    const auto first = io_detail::split_csv_line(lines[0]);
    double tmp = 0;
    if (first.size() == 2 && !io_detail::parse_double(first[1], tmp)) start = 1;
  }
  for (std::size_t r = start; r < lines.size(); ++r) {
    const auto cells = io_detail::split_csv_line(lines[r]);
    if (cells.size() != 2) throw InputError(source + ": row " + std::to_string(r) + " needs two fields");
    double v = 0;
    if (!io_detail::parse_double(cells[1], v) || v != std::floor(v))
      throw InputError(source + ": non-integer label at row " + std::to_string(r));
    out.names.push_back(cells[0]);
    labels.push_back(static_cast<int>(v));
  }
  out.clustering = make_clustering(std::move(labels));
  return out;
}

inline LabelledClustering load_clustering_csv(const std::filesystem::path& path) {
  return parse_clustering_csv(io_detail::read_lines(path), path.string());
}

/// Reorders a labelled clustering to follow `names`.
inline Clustering align_clustering(const LabelledClustering& lc, const std::vector<std::string>& names) {
  std::map<std::string, int> label_of;
  for (std::size_t i = 0; i < lc.names.size(); ++i) label_of[lc.names[i]] = lc.clustering.labels[i];
  std::vector<int> labels;
  for (const auto& n : names) {
    auto it = label_of.find(n);
    if (it == label_of.end()) throw InputError("variable '" + n + "' has no cluster label");
    labels.push_back(it->second);
  }
  return make_clustering(std::move(labels), lc.clustering.method);
}

/// (pathway, variable) rows; an optional header is skipped.
inline PathwayMap parse_pathway_csv(const std::vector<std::string>& lines, const std::string& source = "input") {
  PathwayMap m;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const auto cells = io_detail::split_csv_line(lines[r]);
    if (cells.size() != 2) throw InputError(source + ": row " + std::to_string(r + 1) + " needs two fields");
    if (r == 0 && cells[0] == "pathway" && cells[1] == "variable") continue;
    m.add(cells[0], cells[1]);
  }
  return m;
}

inline PathwayMap load_pathway_csv(const std::filesystem::path& path) {
  return parse_pathway_csv(io_detail::read_lines(path), path.string());
}

enum class GraphFormat { dot, graphml };

inline GraphFormat parse_graph_format(const std::string& s) {
  if (s == "dot") return GraphFormat::dot;
  if (s == "graphml") return GraphFormat::graphml;
  throw ConfigError("unknown graph format '" + s + "'");
}

struct GraphExportOptions {
  double display_threshold = 0.05;
  int min_cluster_size = 4;
  std::string gray = "#bfbfbf";
};

/// Color per 0-based cluster label: clusters smaller than the size threshold
/// are gray, the rest cycle through a qualitative palette in label order.
inline std::vector<std::string> cluster_colors(const Clustering& c, const GraphExportOptions& opts = {}) {
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                  "#e377c2", "#17becf", "#bcbd22", "#393b79", "#637939", "#843c39"};
  const auto sizes = c.cluster_sizes();
  std::vector<std::string> colors(static_cast<std::size_t>(c.k));
  std::size_t next = 0;
  for (int k = 0; k < c.k; ++k)
    colors[k] = sizes[k] >= opts.min_cluster_size ? palette[next++ % std::size(palette)] : opts.gray;
  return colors;
}

inline std::string graph_text(const WeightedAdjacency& adj, const Clustering& c, GraphFormat format,
                              const GraphExportOptions& opts = {}) {
  const Eigen::Index p = adj.W.rows();
  if (adj.W.cols() != p || static_cast<Eigen::Index>(c.size()) != p)
    throw InputError("graph export: adjacency and clustering sizes differ");
  std::vector<std::string> names = adj.names.size() == static_cast<std::size_t>(p) ? adj.names : default_names(p);
  const auto colors = cluster_colors(c, opts);
  std::ostringstream os;
  if (format == GraphFormat::dot) {
    os << "graph bngc {\n";
    for (Eigen::Index i = 0; i < p; ++i) {
      const int l = c.labels[static_cast<std::size_t>(i)];
      os << "  \"" << names[static_cast<std::size_t>(i)] << "\" [cluster=" << l + 1 << ", style=filled, fillcolor=\""
         << colors[l] << "\"];\n";
    }
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = i + 1; j < p; ++j)
        if (adj.W(i, j) > opts.display_threshold)
          os << "  \"" << names[static_cast<std::size_t>(i)] << "\" -- \"" << names[static_cast<std::size_t>(j)]
             << "\" [weight=" << io_detail::fmt(adj.W(i, j), 17) << "];\n";
    os << "}\n";
    return os.str();
  }
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
     << "  <key id=\"cluster\" for=\"node\" attr.name=\"cluster\" attr.type=\"int\"/>\n"
     << "  <key id=\"color\" for=\"node\" attr.name=\"color\" attr.type=\"string\"/>\n"
     << "  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n"
     << "  <graph id=\"bngc\" edgedefault=\"undirected\">\n";
  for (Eigen::Index i = 0; i < p; ++i) {
    const int l = c.labels[static_cast<std::size_t>(i)];
    os << "    <node id=\"" << io_detail::xml_escape(names[static_cast<std::size_t>(i)]) << "\">"
       << "<data key=\"cluster\">" << l + 1 << "</data><data key=\"color\">" << colors[l] << "</data></node>\n";
  }
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = i + 1; j < p; ++j)
      if (adj.W(i, j) > opts.display_threshold)
        os << "    <edge source=\"" << io_detail::xml_escape(names[static_cast<std::size_t>(i)]) << "\" target=\""
           << io_detail::xml_escape(names[static_cast<std::size_t>(j)]) << "\"><data key=\"weight\">"
           << io_detail::fmt(adj.W(i, j), 17) << "</data></edge>\n";
  os << "  </graph>\n</graphml>\n";
  return os.str();
}

inline void export_graph(const WeightedAdjacency& adj, const Clustering& c, const std::filesystem::path& path,
                         GraphFormat format, const GraphExportOptions& opts = {}) {
  write_text(path, graph_text(adj, c, format, opts));
}

struct ParsedGraph {
  struct Node {
    std::string id;
    int cluster = 0;
    std::string color;
  };
  struct Edge {
    std::string source, target;
    double weight = 0.0;
  };
  std::vector<Node> nodes;
  std::vector<Edge> edges;
};

/// Reads back the GraphML subset written by graph_text.
inline ParsedGraph parse_graphml(const std::string& text) {
  ParsedGraph g;
  static const std::regex node_re(
      R"re(<node id="([^"]*)"><data key="cluster">(-?\d+)</data><data key="color">([^<]*)</data></node>)re");
  static const std::regex edge_re(
      R"re(<edge source="([^"]*)" target="([^"]*)"><data key="weight">([^<]+)</data></edge>)re");
  for (auto it = std::sregex_iterator(text.begin(), text.end(), node_re); it != std::sregex_iterator(); ++it)
    g.nodes.push_back({io_detail::xml_unescape((*it)[1]), std::stoi((*it)[2]), (*it)[3]});
  for (auto it = std::sregex_iterator(text.begin(), text.end(), edge_re); it != std::sregex_iterator(); ++it) {
    double w = 0.0;
    if (!io_detail::parse_double((*it)[3], w)) throw InputError("graphml: bad edge weight");
    g.edges.push_back({io_detail::xml_unescape((*it)[1]), io_detail::xml_unescape((*it)[2]), w});
  }
  if (text.find("<graphml") == std::string::npos) throw InputError("graphml: missing root element");
  return g;
}

}  // namespace bngc
