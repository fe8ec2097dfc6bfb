#pragma once

// Simulation design (random block partitions, Wishart block covariances,
// block-independent Gaussian data) and the multi-method benchmark harness.

#include "bngc/graph_clustering.hpp"
#include "bngc/metrics.hpp"
#include "bngc/parallel.hpp"
#include "bngc/random.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace bngc {

struct SimDesign {
  int n = 200;
  int p = 100;
  int K = 5;
  int n_partitions = 10;
  int n_datasets_per_partition = 10;
  std::uint64_t seed = 1;

  void validate() const {
    if (n < 2) throw ConfigError("design requires n >= 2");
    if (p < 1 || K < 1 || K > p) throw ConfigError("design requires 1 <= K <= p");
    if (n_partitions < 1 || n_datasets_per_partition < 1)
      throw ConfigError("design requires at least one partition and one dataset");
  }
};

/// log S(p, k) for k = 0..K, Stirling numbers of the second kind.
inline std::vector<std::vector<long double>> log_stirling2_table(int p, int K) {
  const long double ninf = -std::numeric_limits<long double>::infinity();
  std::vector<std::vector<long double>> t(static_cast<std::size_t>(p) + 1,
                                          std::vector<long double>(static_cast<std::size_t>(K) + 1, ninf));
  t[0][0] = 0.0L;
  for (int m = 1; m <= p; ++m)
    for (int k = 1; k <= std::min(m, K); ++k) {
      // S(m, k) = k S(m-1, k) + S(m-1, k-1)
      const long double a = t[m - 1][k] == ninf ? ninf : std::log(static_cast<long double>(k)) + t[m - 1][k];
      const long double b = t[m - 1][k - 1];
      const long double mx = std::max(a, b);
      t[m][k] = mx == ninf ? ninf : mx + std::log(std::exp(a - mx) + std::exp(b - mx));
    }
  return t;
}

/// Exact uniform draw over set partitions of p items into K nonempty blocks,
/// driven by the recursion S(m, k) = k S(m-1, k) + S(m-1, k-1).
inline Clustering random_partition_stirling(int p, int K, Rng& rng) {
  if (K < 1 || p < 1 || K > p) throw InputError("random_partition requires 1 <= K <= p");
  const auto table = log_stirling2_table(p, K);
  // Backward decisions: does item m open a new block among items 1..m?
  std::vector<bool> opens(static_cast<std::size_t>(p) + 1, false);
  int k = K;
  for (int m = p; m >= 1; --m) {
    const long double log_new = k >= 1 ? table[m - 1][k - 1] - table[m][k]
                                       : -std::numeric_limits<long double>::infinity();
    const bool is_new = static_cast<long double>(uniform01(rng)) < std::exp(log_new);
    opens[m] = is_new;
    if (is_new) --k;
  }
  std::vector<int> labels(static_cast<std::size_t>(p));
  int blocks = 0;
  for (int m = 1; m <= p; ++m) labels[m - 1] = opens[m] ? blocks++ : uniform_int(rng, 0, blocks - 1);
  return make_clustering(labels, "truth");
}

/// Uniform random set partition of p items into exactly K nonempty blocks.
/// Rejection from uniform K-labelings when that accepts often (every K-block
/// partition has exactly K! surjective labelings, so the accepted draw is
/// uniform over partitions); otherwise the Stirling-recursion sampler.
inline Clustering random_partition(int p, int K, Rng& rng) {
  if (K < 1 || p < 1) throw InputError("random_partition requires p >= 1 and K >= 1");
  if (K > p) throw InputError("random_partition: K exceeds p");
  std::vector<int> labels(static_cast<std::size_t>(p));
  if (K == p) {
    for (int i = 0; i < p; ++i) labels[i] = i;
    return make_clustering(labels, "truth");
  }
  const auto table = log_stirling2_table(p, K);
  const long double log_accept =
      std::lgamma(static_cast<long double>(K) + 1) + table[p][K] - p * std::log(static_cast<long double>(K));
  if (log_accept <= std::log(0.01L)) return random_partition_stirling(p, K, rng);
  for (;;) {
    std::vector<int> seen(static_cast<std::size_t>(K), 0);
    int distinct = 0;
    for (int i = 0; i < p; ++i) {
      labels[i] = uniform_int(rng, 0, K - 1);
      if (!seen[labels[i]]++) ++distinct;
    }
    if (distinct == K) return make_clustering(labels, "truth");
  }
}

/// Wishart(df = dim + 1, scale = I) via the Bartlett decomposition.
inline Matrix sample_block_covariance(int dim, Rng& rng) {
  if (dim < 1) throw InputError("block dimension must be >= 1");
  const double df = dim + 1.0;
  Matrix T = Matrix::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    T(i, i) = std::sqrt(chi_squared(rng, df - i));
    for (int j = 0; j < i; ++j) T(i, j) = standard_normal(rng);
  }
  return T * T.transpose();
}

struct SimulatedDataset {
  DataMatrix data;
  Matrix true_partial_correlation;  // block diagonal in the original variable order
  std::vector<Matrix> block_covariances;
};

/// Draws n samples from prod_j N(0, Sigma_j) with Sigma_j ~ Wishart. Columns
/// keep the original variable order, so blocks are scattered.
inline SimulatedDataset simulate_dataset(const SimDesign& design, const Clustering& partition, Rng& rng) {
  if (static_cast<int>(partition.size()) != design.p) throw InputError("partition size does not match p");
  SimulatedDataset out;
  out.data.values = Matrix::Zero(design.n, design.p);
  out.data.names = default_names(design.p);
  out.true_partial_correlation = Matrix::Identity(design.p, design.p);
  std::vector<std::vector<int>> members(static_cast<std::size_t>(partition.k));
  for (int i = 0; i < design.p; ++i) members[partition.labels[i]].push_back(i);
  for (const auto& block : members) {
    const int dim = static_cast<int>(block.size());
    Matrix sigma = sample_block_covariance(dim, rng);
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) throw NumericalError("Wishart draw is not positive definite");
    Matrix Z(design.n, dim);
    for (int r = 0; r < design.n; ++r)
      for (int c = 0; c < dim; ++c) Z(r, c) = standard_normal(rng);
    const Matrix X = Z * llt.matrixL().transpose();
    const Matrix R = partial_correlations_from_precision(llt.solve(Matrix::Identity(dim, dim)));
    for (int a = 0; a < dim; ++a) {
      out.data.values.col(block[a]) = X.col(a);
      for (int b = 0; b < dim; ++b) out.true_partial_correlation(block[a], block[b]) = R(a, b);
    }
    out.block_covariances.push_back(std::move(sigma));
  }
  return out;
}

/// Partition i of a design, from the stream ("partition", i).
inline Clustering design_partition(const SimDesign& design, int i) {
  Rng rng = make_stream(design.seed, "partition", {static_cast<std::uint64_t>(i)});
  return random_partition(design.p, design.K, rng);
}

/// Dataset d of partition i, from the stream ("dataset", i, d).
inline SimulatedDataset design_dataset(const SimDesign& design, const Clustering& partition, int i, int d) {
  Rng rng(derive_seed(design.seed, "dataset", {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(d)}));
  return simulate_dataset(design, partition, rng);
}

inline nlohmann::json to_json(const SimDesign& d) {
  return {{"n", d.n}, {"p", d.p}, {"K", d.K}, {"n_partitions", d.n_partitions},
          {"n_datasets_per_partition", d.n_datasets_per_partition}, {"seed", d.seed}};
}

inline SimDesign design_from_json(const nlohmann::json& j) {
  SimDesign d;
  for (const auto& [k, v] : j.items()) {
    try {
      if (k == "n") d.n = v.get<int>();
      else if (k == "p") d.p = v.get<int>();
      else if (k == "K") d.K = v.get<int>();
      else if (k == "n_partitions") d.n_partitions = v.get<int>();
      else if (k == "n_datasets_per_partition") d.n_datasets_per_partition = v.get<int>();
      else if (k == "seed") d.seed = v.get<std::uint64_t>();
      else throw ConfigError("unknown design key '" + k + "'");
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("design key '" + k + "' has the wrong type");
    }
  }
  d.validate();
  return d;
}

enum class MethodKind { bngc, kmeans, external };

struct BenchmarkMethod {
  std::string name = "BNGC";
  MethodKind kind = MethodKind::bngc;
  std::string external_dir;  // external: <dir>/partition<i>_dataset<j>.csv with one label per line
};

struct BenchmarkOptions {
  GraphClusteringConfig graph;
  int kmeans_restarts = 20;
  unsigned threads = 0;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

struct BenchmarkRecord {
  int n = 0, p = 0, K = 0;
  int partition_index = 0;
  int dataset_index = 0;
  std::string method;
  std::vector<int> truth;
  std::vector<int> labels;
  int k_found = 0;
  int embedding_dim = 0;
  double nmi = 0.0;
  double edge_density = 0.0;            // on the true partial-correlation graph
  double edge_density_estimated = 0.0;  // on the estimated graph the method used
  double seconds = 0.0;
  bool failed = false;
  std::string error;
  std::uint64_t dataset_seed = 0;
  std::uint64_t method_seed = 0;
};

inline nlohmann::json to_json(const BenchmarkRecord& r) {
  auto one_based = [](std::vector<int> v) {
    for (int& x : v) ++x;
    return v;
  };
  return {{"n", r.n},
          {"p", r.p},
          {"K", r.K},
          {"partition", r.partition_index},
          {"dataset", r.dataset_index},
          {"method", r.method},
          {"truth", one_based(r.truth)},
          {"labels", one_based(r.labels)},
          {"k_found", r.k_found},
          {"embedding_dim", r.embedding_dim},
          {"nmi", r.nmi},
          {"edge_density", r.edge_density},
          {"edge_density_estimated", r.edge_density_estimated},
          {"edge_density_pairs", "unordered"},
          {"seconds", r.seconds},
          {"failed", r.failed},
          {"error", r.error},
          {"dataset_seed", r.dataset_seed},
          {"method_seed", r.method_seed}};
}

namespace detail {

inline std::optional<std::vector<int>> read_label_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::vector<int> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find_last_of(',');
    const std::string cell = comma == std::string::npos ? line : line.substr(comma + 1);
    try {
      labels.push_back(std::stoi(cell));
    } catch (const std::exception&) {
      if (labels.empty()) continue;  // header
      return std::nullopt;
    }
  }
  return labels;
}

}  // namespace detail

/// One record per (partition, dataset, method). Method failures are recorded,
/// never thrown. Every job draws from streams keyed by (seed, partition,
/// dataset), so results do not depend on scheduling.
inline std::vector<BenchmarkRecord> run_benchmark(const SimDesign& design, const std::vector<BenchmarkMethod>& methods,
                                                  const BenchmarkOptions& opts = {}) {
  design.validate();
  const std::size_t jobs = static_cast<std::size_t>(design.n_partitions) * design.n_datasets_per_partition;
  std::vector<Clustering> partitions;
  for (int i = 0; i < design.n_partitions; ++i) partitions.push_back(design_partition(design, i));

  std::vector<std::vector<BenchmarkRecord>> per_job(jobs);
  std::mutex progress_mutex;
  std::size_t done = 0;
  const unsigned threads = opts.threads == 0 ? default_thread_count() : opts.threads;

  parallel_for(jobs, threads, [&](std::size_t job) {
    const int pi = static_cast<int>(job) / design.n_datasets_per_partition;
    const int di = static_cast<int>(job) % design.n_datasets_per_partition;
    const auto upi = static_cast<std::uint64_t>(pi), udi = static_cast<std::uint64_t>(di);
    const std::uint64_t dataset_seed = derive_seed(design.seed, "dataset", {upi, udi});
    const std::uint64_t method_seed = derive_seed(design.seed, "method", {upi, udi});
    const SimulatedDataset sim = design_dataset(design, partitions[pi], pi, di);
    Matrix true_W = sim.true_partial_correlation.cwiseAbs();
    true_W.diagonal().setZero();

    GraphClusteringConfig gcfg = opts.graph;
    gcfg.spike_slab.seed = method_seed;
    gcfg.spike_slab.threads = 1;
    gcfg.dpmm.seed = method_seed;

    // The estimated graph is shared by the graph-based methods.
    std::optional<WeightedAdjacency> adjacency;
    std::string graph_error;
    double graph_seconds = 0.0;
    auto ensure_graph = [&] {
      if (adjacency || !graph_error.empty()) return;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        adjacency = adjacency_from_partial_correlations(estimate_partial_correlations(sim.data, gcfg.spike_slab));
      } catch (const std::exception& e) {
        graph_error = e.what();
      }
      graph_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    for (const auto& m : methods) {
      BenchmarkRecord rec;
      rec.n = design.n;
      rec.p = design.p;
      rec.K = design.K;
      rec.partition_index = pi;
      rec.dataset_index = di;
      rec.method = m.name;
      rec.truth = partitions[pi].labels;
      rec.dataset_seed = dataset_seed;
      rec.method_seed = method_seed;
      auto t0 = std::chrono::steady_clock::now();
      try {
        Clustering est;
        if (m.kind == MethodKind::external) {
          const auto path = std::filesystem::path(m.external_dir) /
                            ("partition" + std::to_string(pi) + "_dataset" + std::to_string(di) + ".csv");
          auto labels = detail::read_label_file(path);
          if (!labels || static_cast<int>(labels->size()) != design.p)
            throw InputError("no usable external labels at " + path.string());
          est = make_clustering(*labels, m.name);
        } else {
          ensure_graph();
          t0 = std::chrono::steady_clock::now();
          if (!adjacency) throw NumericalError("graph estimation failed: " + graph_error);
          rec.seconds += graph_seconds;
          SpectralDecomposition dec = build_laplacian(*adjacency, gcfg.spectral.variant);
          if (m.kind == MethodKind::bngc) {
            const Embedding e = embedding_for_clustering(dec, gcfg.spectral);
            rec.embedding_dim = e.dim;
            est = cluster_embedding(e, gcfg);
          } else {
            Embedding e = embed(dec, design.K);
            if (gcfg.spectral.row_normalize) e = normalize_rows(std::move(e));
            rec.embedding_dim = e.dim;
            KMeansConfig kc;
            kc.k = design.K;
            kc.restarts = opts.kmeans_restarts;
            kc.seed = method_seed;
            est = kmeans(e.Y, kc);
          }
          rec.edge_density_estimated = between_cluster_edge_density(adjacency->W, est.labels);
        }
        rec.labels = est.labels;
        rec.k_found = est.k;
        rec.nmi = nmi(rec.truth, rec.labels);
        rec.edge_density = between_cluster_edge_density(true_W, rec.labels);
      } catch (const std::exception& e) {
        rec.failed = true;
        rec.error = e.what();
      }
      rec.seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      per_job[job].push_back(std::move(rec));
    }
    if (opts.progress) {
      std::lock_guard lock(progress_mutex);
      opts.progress(++done, jobs);
    }
  });

  std::vector<BenchmarkRecord> records;
  for (auto& v : per_job)
    for (auto& r : v) records.push_back(std::move(r));
  return records;
}

struct AggregateRow {
  std::string method;
  int n = 0, p = 0, K = 0;
  int count = 0;
  int failures = 0;
  double nmi_mean = 0, nmi_sd = 0, nmi_se = 0;
  double density_mean = 0, density_sd = 0, density_se = 0;
};

/// Mean, standard deviation and standard error per (method, n, p, K) cell over
/// the successful records.
inline std::vector<AggregateRow> aggregate(const std::vector<BenchmarkRecord>& records) {
  using Key = std::tuple<int, int, int, std::string>;
  std::map<Key, std::vector<const BenchmarkRecord*>> cells;
  std::vector<Key> order;
  for (const auto& r : records) {
    Key key{r.n, r.p, r.K, r.method};
    if (!cells.count(key)) order.push_back(key);
    cells[key].push_back(&r);
  }
  auto stats = [](const std::vector<double>& v, double& mean, double& sd, double& se) {
    mean = sd = se = 0;
    if (v.empty()) return;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
      for (double x : v) sd += (x - mean) * (x - mean);
      sd = std::sqrt(sd / static_cast<double>(v.size() - 1));
      se = sd / std::sqrt(static_cast<double>(v.size()));
    }
  };
  std::vector<AggregateRow> rows;
  for (const auto& key : order) {
    AggregateRow row;
    std::tie(row.n, row.p, row.K, row.method) = key;
    std::vector<double> nmis, dens;
    for (const auto* r : cells[key]) {
      ++row.count;
      if (r->failed) {
        ++row.failures;
        continue;
      }
      nmis.push_back(r->nmi);
      dens.push_back(r->edge_density);
    }
    stats(nmis, row.nmi_mean, row.nmi_sd, row.nmi_se);
    stats(dens, row.density_mean, row.density_sd, row.density_se);
    rows.push_back(row);
  }
  return rows;
}

inline std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::ostringstream os;
  os.precision(6);
  os << "method,n,p,K,records,failures,nmi_mean,nmi_se,nmi_sd,density_mean,density_se,density_sd\n";
  for (const auto& r : rows)
    os << r.method << ',' << r.n << ',' << r.p << ',' << r.K << ',' << r.count << ',' << r.failures << ','
       << r.nmi_mean << ',' << r.nmi_se << ',' << r.nmi_sd << ',' << r.density_mean << ',' << r.density_se << ','
       << r.density_sd << '\n';
  return os.str();
}

}  // namespace bngc
