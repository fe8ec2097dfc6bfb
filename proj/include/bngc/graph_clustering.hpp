#pragma once

// The end-to-end variable clustering method: partial-correlation graph,
// Laplacian embedding, then DP-means (or DPMM) on the embedded points.

#include "bngc/dpcluster.hpp"
#include "bngc/neighborhood.hpp"
#include "bngc/spectral.hpp"

#include <string>

namespace bngc {

enum class Clusterer { dp_means, dpmm };

inline std::string to_string(Clusterer c) { return c == Clusterer::dpmm ? "dpmm" : "dp-means"; }

inline Clusterer parse_clusterer(const std::string& s) {
  if (s == "dp-means" || s == "dpmeans" || s == "dp_means") return Clusterer::dp_means;
  if (s == "dpmm") return Clusterer::dpmm;
  throw ConfigError("unknown clusterer '" + s + "'");
}

struct SpectralConfig {
  LaplacianVariant variant = LaplacianVariant::sym;
  double eps_abs = 1e-6;
  int max_k = 0;  // 0 = ceil(p/2)
  bool row_normalize = true;
};

struct GraphClusteringConfig {
  SpikeSlabConfig spike_slab;
  SpectralConfig spectral;
  Clusterer clusterer = Clusterer::dp_means;
  DPMeansConfig dp_means;
  DPMMConfig dpmm;
};

struct GraphClusteringResult {
  PartialCorrelationEstimate estimate;
  WeightedAdjacency adjacency;
  SpectralDecomposition spectrum;
  Embedding embedding;
  Clustering clustering;
};

/// Embedding used for clustering: K_n chosen from the spectrum, rows
/// optionally scaled to unit length.
inline Embedding embedding_for_clustering(SpectralDecomposition& dec, const SpectralConfig& cfg) {
  dec.embedding_dim = choose_embedding_dimension(dec, cfg.eps_abs, cfg.max_k);
  Embedding e = embed(dec, dec.embedding_dim);
  return cfg.row_normalize ? normalize_rows(std::move(e)) : e;
}

inline Clustering cluster_embedding(const Embedding& e, const GraphClusteringConfig& cfg) {
  if (cfg.clusterer == Clusterer::dpmm) return dpmm_gibbs(e.Y, cfg.dpmm).map;
  return dp_means(e.Y, cfg.dp_means);
}

inline GraphClusteringResult cluster_variables(const DataMatrix& data, const GraphClusteringConfig& cfg) {
  GraphClusteringResult r;
  r.estimate = estimate_partial_correlations(data, cfg.spike_slab);
  r.adjacency = adjacency_from_partial_correlations(r.estimate);
  r.spectrum = build_laplacian(r.adjacency, cfg.spectral.variant);
  r.embedding = embedding_for_clustering(r.spectrum, cfg.spectral);
  r.clustering = cluster_embedding(r.embedding, cfg);
  return r;
}

}  // namespace bngc
