#pragma once

#include "bngc/graph_clustering.hpp"
#include "bngc/io.hpp"
#include "bngc/metrics.hpp"
#include "bngc/random.hpp"

#include <nlohmann/json.hpp>
#include <toml++/toml.hpp>

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bngc {

inline constexpr const char* version = "1.0.0";

/// FNV-1a over raw bytes, hex encoded.
inline std::string checksum_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
  return buf;
}

// ---------------------------------------------------------------------------
// Config documents: TOML or JSON, both handled as nlohmann::json internally.

inline nlohmann::json toml_to_json(const toml::node& node) {
  if (auto t = node.as_table()) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : *t) j[std::string(k.str())] = toml_to_json(v);
    return j;
  }
  if (auto a = node.as_array()) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& v : *a) j.push_back(toml_to_json(v));
    return j;
  }
  if (auto v = node.as_string()) return v->get();
  if (auto v = node.as_integer()) return v->get();
  if (auto v = node.as_floating_point()) return v->get();
  if (auto v = node.as_boolean()) return v->get();
  throw ConfigError("unsupported TOML value (dates and times are not accepted)");
}

/// Parses a config document; JSON when the text starts with '{', TOML otherwise.
inline nlohmann::json parse_config_text(const std::string& text, const std::string& source = "config") {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(source + ": " + e.what());
    }
  }
  try {
    return toml_to_json(toml::parse(text, source));
  } catch (const toml::parse_error& e) {
    throw ConfigError(source + ": " + std::string(e.description()));
  }
}

inline nlohmann::json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config_text(os.str(), path.string());
}

/// Applies "a.b.c=value" to a config document. The value is read as JSON when
/// it parses, as a plain string otherwise.
inline void apply_override(nlohmann::json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  nlohmann::json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (!node->is_object()) *node = nlohmann::json::object();
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = value;
}

namespace config_detail {

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(section + "." + key + " has the wrong type");
  }
}

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known, const std::string& section) {
  if (!j.is_object()) throw ConfigError("section '" + section + "' must be a table");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* name : known) ok = ok || k == name;
    if (!ok) throw ConfigError("unknown key '" + (section.empty() ? k : section + "." + k) + "'");
  }
}

}  // namespace config_detail

inline nlohmann::json to_json(const SpikeSlabConfig& c) {
  return {{"a1", c.a1}, {"a2", c.a2}, {"b1", c.b1}, {"b2", c.b2}, {"nu0", c.nu0}, {"n_iter", c.n_iter},
          {"n_burnin", c.n_burnin}, {"thin", c.thin}, {"threads", c.threads}};
}

inline void from_json_section(const nlohmann::json& j, SpikeSlabConfig& c) {
  using config_detail::read;
  config_detail::reject_unknown(j, {"a1", "a2", "b1", "b2", "nu0", "n_iter", "n_burnin", "thin", "threads"}, "spike_slab");
  read(j, "a1", c.a1, "spike_slab");
  read(j, "a2", c.a2, "spike_slab");
  read(j, "b1", c.b1, "spike_slab");
  read(j, "b2", c.b2, "spike_slab");
  read(j, "nu0", c.nu0, "spike_slab");
  read(j, "n_iter", c.n_iter, "spike_slab");
  read(j, "n_burnin", c.n_burnin, "spike_slab");
  read(j, "thin", c.thin, "spike_slab");
  read(j, "threads", c.threads, "spike_slab");
}

inline nlohmann::json to_json(const SpectralConfig& c) {
  return {{"variant", to_string(c.variant)}, {"eps_abs", c.eps_abs}, {"max_k", c.max_k},
          {"row_normalize", c.row_normalize}};
}

inline void from_json_section(const nlohmann::json& j, SpectralConfig& c) {
  using config_detail::read;
  config_detail::reject_unknown(j, {"variant", "eps_abs", "max_k", "row_normalize"}, "spectral");
  std::string variant = to_string(c.variant);
  read(j, "variant", variant, "spectral");
  c.variant = parse_variant(variant);
  read(j, "eps_abs", c.eps_abs, "spectral");
  read(j, "max_k", c.max_k, "spectral");
  read(j, "row_normalize", c.row_normalize, "spectral");
  if (!(c.eps_abs >= 0)) throw ConfigError("spectral.eps_abs must be nonnegative");
  if (c.max_k < 0) throw ConfigError("spectral.max_k must be nonnegative");
}

struct OutputConfig {
  std::vector<std::string> graph_formats{"dot", "graphml"};
  double display_threshold = 0.05;
  int min_cluster_size = 4;
};

enum class Stage { graph, embed, cluster, all };

inline std::string to_string(Stage s) {
  switch (s) {
    case Stage::graph: return "graph";
    case Stage::embed: return "embed";
    case Stage::cluster: return "cluster";
    default: return "all";
  }
}

inline Stage parse_stage(const std::string& s) {
  if (s == "graph") return Stage::graph;
  if (s == "embed") return Stage::embed;
  if (s == "cluster") return Stage::cluster;
  if (s == "all") return Stage::all;
  throw ConfigError("unknown stage '" + s + "' (graph, embed, cluster, all)");
}

struct PipelineConfig {
  std::string input;
  std::string output_dir = "bngc_out";
  std::string truth;  // optional (variable, label) CSV for metrics
  std::uint64_t seed = 1;
  Stage stop_after = Stage::all;
  GraphClusteringConfig graph;
  OutputConfig output;

  /// Per-stage seeds come from the top-level seed by named derivation.
  void derive_seeds() {
    graph.spike_slab.seed = derive_seed(seed, "spike-slab");
    graph.dpmm.seed = derive_seed(seed, "dpmm");
    graph.dp_means.seed = derive_seed(seed, "dp-means");
  }

  void validate() const {
    if (input.empty()) throw ConfigError("input path is required");
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
    graph.spike_slab.validate();
    graph.dp_means.validate();
    graph.dpmm.validate();
    for (const auto& f : output.graph_formats) parse_graph_format(f);
    if (output.min_cluster_size < 1) throw ConfigError("output.min_cluster_size must be >= 1");
    if (!(output.display_threshold >= 0)) throw ConfigError("output.display_threshold must be nonnegative");
  }
};

inline nlohmann::json to_json(const PipelineConfig& c) {
  const auto& dm = c.graph.dp_means;
  const auto& mm = c.graph.dpmm;
  return {{"input", c.input},
          {"output_dir", c.output_dir},
          {"truth", c.truth},
          {"seed", c.seed},
          {"stop_after", to_string(c.stop_after)},
          {"spike_slab", to_json(c.graph.spike_slab)},
          {"spectral", to_json(c.graph.spectral)},
          {"clustering",
           {{"method", to_string(c.graph.clusterer)},
            {"lambda", dm.lambda},
            {"max_iter", dm.max_iter},
            {"refine", dm.refine},
            {"dpmm",
             {{"alpha0", mm.alpha0}, {"sigma", mm.sigma}, {"rho", mm.rho}, {"n_iter", mm.n_iter},
              {"n_burnin", mm.n_burnin}}}}},
          {"output",
           {{"graph_formats", c.output.graph_formats},
            {"display_threshold", c.output.display_threshold},
            {"min_cluster_size", c.output.min_cluster_size}}}};
}

inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  using config_detail::read;
  config_detail::reject_unknown(
      j, {"input", "output_dir", "truth", "seed", "stop_after", "spike_slab", "spectral", "clustering", "output"}, "");
  PipelineConfig c;
  read(j, "input", c.input, "");
  read(j, "output_dir", c.output_dir, "");
  read(j, "truth", c.truth, "");
  if (j.contains("seed")) {
    const auto& s = j.at("seed");
    if (s.is_number_unsigned()) c.seed = s.get<std::uint64_t>();
    else if (s.is_number_integer() && s.get<std::int64_t>() >= 0) c.seed = static_cast<std::uint64_t>(s.get<std::int64_t>());
    else throw ConfigError("seed must be a nonnegative integer");
  }
  std::string stage = "all";
  read(j, "stop_after", stage, "");
  c.stop_after = parse_stage(stage);
  if (j.contains("spike_slab")) from_json_section(j.at("spike_slab"), c.graph.spike_slab);
  if (j.contains("spectral")) from_json_section(j.at("spectral"), c.graph.spectral);
  if (j.contains("clustering")) {
    const auto& cl = j.at("clustering");
    config_detail::reject_unknown(cl, {"method", "lambda", "max_iter", "refine", "dpmm"}, "clustering");
    std::string method = to_string(c.graph.clusterer);
    read(cl, "method", method, "clustering");
    c.graph.clusterer = parse_clusterer(method);
    read(cl, "lambda", c.graph.dp_means.lambda, "clustering");
    read(cl, "max_iter", c.graph.dp_means.max_iter, "clustering");
    read(cl, "refine", c.graph.dp_means.refine, "clustering");
    if (cl.contains("dpmm")) {
      const auto& mm = cl.at("dpmm");
      config_detail::reject_unknown(mm, {"alpha0", "sigma", "rho", "n_iter", "n_burnin"}, "clustering.dpmm");
      read(mm, "alpha0", c.graph.dpmm.alpha0, "clustering.dpmm");
      read(mm, "sigma", c.graph.dpmm.sigma, "clustering.dpmm");
      read(mm, "rho", c.graph.dpmm.rho, "clustering.dpmm");
      read(mm, "n_iter", c.graph.dpmm.n_iter, "clustering.dpmm");
      read(mm, "n_burnin", c.graph.dpmm.n_burnin, "clustering.dpmm");
    }
  }
  if (j.contains("output")) {
    const auto& o = j.at("output");
    config_detail::reject_unknown(o, {"graph_formats", "display_threshold", "min_cluster_size"}, "output");
    read(o, "graph_formats", c.output.graph_formats, "output");
    read(o, "display_threshold", c.output.display_threshold, "output");
    read(o, "min_cluster_size", c.output.min_cluster_size, "output");
  }
  c.derive_seeds();
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------

struct StageTime {
  std::string stage;
  double seconds = 0.0;
};

struct OutputFile {
  std::string path;  // relative to the output directory
  std::string checksum;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string tool_version = version;
  nlohmann::json config;  // fully resolved
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::uint64_t>> streams;
  std::string input_path;
  std::string input_checksum;
  std::vector<StageTime> stage_times;
  std::vector<OutputFile> outputs;
  nlohmann::json summary = nlohmann::json::object();
};

inline nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json streams = nlohmann::json::array();
  for (const auto& [label, s] : m.streams) streams.push_back({{"label", label}, {"seed", s}});
  nlohmann::json times = nlohmann::json::array();
  for (const auto& t : m.stage_times) times.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  nlohmann::json outs = nlohmann::json::array();
  for (const auto& o : m.outputs) outs.push_back({{"path", o.path}, {"checksum", o.checksum}, {"bytes", o.bytes}});
  return {{"tool_version", m.tool_version}, {"config", m.config},     {"seed", m.seed},
          {"streams", streams},             {"input", {{"path", m.input_path}, {"checksum", m.input_checksum}}},
          {"stage_times", times},           {"outputs", outs},        {"summary", m.summary}};
}

/// The resolved config embedded in a manifest, for reruns.
inline PipelineConfig config_from_manifest(const nlohmann::json& manifest) {
  if (!manifest.contains("config")) throw ConfigError("manifest has no config section");
  return pipeline_config_from_json(manifest.at("config"));
}

/// Runs the stages in order, writing each stage's outputs as it completes. On
/// failure a `.partial` marker naming the stage is left in the output
/// directory and the error is rethrown with the stage prefixed.
inline RunManifest run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  if (!fs::is_regular_file(cfg.input)) throw InputError("input file not found: " + cfg.input);
  if (!cfg.truth.empty() && !fs::is_regular_file(cfg.truth)) throw InputError("truth file not found: " + cfg.truth);

  RunManifest m;
  m.config = to_json(cfg);
  m.seed = cfg.seed;
  m.streams = {{"spike-slab", cfg.graph.spike_slab.seed},
               {"dpmm", cfg.graph.dpmm.seed},
               {"dp-means", cfg.graph.dp_means.seed}};
  m.input_path = cfg.input;
  const std::string input_bytes = read_text(cfg.input);
  m.input_checksum = checksum_hex(input_bytes);

  const fs::path out = cfg.output_dir;
  const fs::path marker = out / ".partial";
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw InputError("cannot create output directory " + out.string());
  fs::remove(marker, ec);

  auto emit = [&](const std::string& name, const std::string& content) {
    write_text(out / name, content);
    m.outputs.push_back({name, checksum_hex(content), content.size()});
  };

  std::string stage;
  auto clock = std::chrono::steady_clock::now();
  auto begin = [&](const std::string& s) {
    stage = s;
    clock = std::chrono::steady_clock::now();
  };
  auto end = [&] {
    m.stage_times.push_back({stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - clock).count()});
  };
  auto fail = [&](const std::exception& e) {
    write_text(marker, "stage: " + stage + "\nerror: " + e.what() + "\n");
    return "stage '" + stage + "': " + e.what();
  };

  try {
    begin("load");
    const DataMatrix data = parse_data_csv(
        [&] {
          std::vector<std::string> lines;
          std::istringstream is(input_bytes);
          std::string line;
          while (std::getline(is, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!io_detail::trim(line).empty()) lines.push_back(line);
          }
          return lines;
        }(),
        cfg.input);
    end();
    m.summary["n"] = data.n();
    m.summary["p"] = data.p();

    begin("estimate-graph");
    GraphClusteringResult r;
    r.estimate = estimate_partial_correlations(data, cfg.graph.spike_slab);
    r.adjacency = adjacency_from_partial_correlations(r.estimate);
    emit("partial_correlations.csv", matrix_csv(r.estimate.R, data.names));
    emit("adjacency.csv", matrix_csv(r.adjacency.W, data.names));
    end();
    if (cfg.stop_after == Stage::graph) return m;

    begin("embed");
    r.spectrum = build_laplacian(r.adjacency, cfg.graph.spectral.variant);
    r.embedding = embedding_for_clustering(r.spectrum, cfg.graph.spectral);
    emit("laplacian.csv", matrix_csv(r.spectrum.laplacian, data.names));
    emit("spectrum.csv", spectrum_csv(r.spectrum.eigenvalues));
    emit("embedding.csv", embedding_csv(r.embedding));
    m.summary["embedding_dim"] = r.embedding.dim;
    end();
    if (cfg.stop_after == Stage::embed) return m;

    begin("cluster");
    r.clustering = cluster_embedding(r.embedding, cfg.graph);
    emit("clusters.csv", clustering_csv(r.clustering, data.names));
    const auto method_cfg =
        cfg.graph.clusterer == Clusterer::dpmm ? m.config["clustering"]["dpmm"] : m.config["clustering"];
    const std::uint64_t method_seed =
        cfg.graph.clusterer == Clusterer::dpmm ? cfg.graph.dpmm.seed : cfg.graph.dp_means.seed;
    emit("clusters.json", clustering_sidecar(r.clustering, method_cfg, method_seed).dump(2) + "\n");
    m.summary["k"] = r.clustering.k;
    end();
    if (cfg.stop_after == Stage::cluster) return m;

    begin("metrics");
    nlohmann::json metrics = {{"k", r.clustering.k},
                              {"entropy", entropy(r.clustering)},
                              {"edge_density_estimated", between_cluster_edge_density(r.adjacency.W, r.clustering.labels)}};
    if (!cfg.truth.empty()) {
      const Clustering truth = align_clustering(load_clustering_csv(cfg.truth), data.names);
      metrics["nmi"] = nmi(truth, r.clustering);
    }
    emit("metrics.json", metrics.dump(2) + "\n");
    GraphExportOptions gopts;
    gopts.display_threshold = cfg.output.display_threshold;
    gopts.min_cluster_size = cfg.output.min_cluster_size;
    for (const auto& f : cfg.output.graph_formats)
      emit("graph." + f, graph_text(r.adjacency, r.clustering, parse_graph_format(f), gopts));
    end();
  } catch (const InputError& e) {
    throw InputError(fail(e));
  } catch (const NumericalError& e) {
    throw NumericalError(fail(e));
  } catch (const ConfigError& e) {
    throw ConfigError(fail(e));
  } catch (const std::exception& e) {
    throw NumericalError(fail(e));
  }
  return m;
}

/// Runs the pipeline and writes manifest.json next to the outputs.
inline RunManifest run_pipeline_with_manifest(const PipelineConfig& cfg) {
  RunManifest m = run_pipeline(cfg);
  write_text(std::filesystem::path(cfg.output_dir) / "manifest.json", to_json(m).dump(2) + "\n");
  return m;
}

}  // namespace bngc
