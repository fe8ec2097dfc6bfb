#pragma once

#include "bngc/core.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace bngc {

/// Pr(theta > 1/2) for theta ~ Beta(a, b) with positive integer a, b, i.e.
/// 1 - I_{1/2}(a, b). For integer parameters the regularized incomplete beta
/// reduces to a binomial tail: Pr(Bin(a + b - 1, 1/2) <= a - 1).
inline double beta_upper_tail_half(int a, int b) {
  if (a < 1 || b < 1) throw InputError("beta_upper_tail_half: parameters must be positive integers");
  const int m = a + b - 1;
  if (m <= 62) {
    // Exact integer binomial coefficients, one rounding at the end.
    std::uint64_t num = 0, c = 1;
    for (int k = 0; k <= a - 1; ++k) {
      num += c;
      c = c * static_cast<std::uint64_t>(m - k) / static_cast<std::uint64_t>(k + 1);
    }
    return static_cast<double>(static_cast<long double>(num) / std::ldexp(1.0L, m));
  }
  // Sum the smaller tail in log space.
  const bool lower = a - 1 <= m / 2;
  const int lo = lower ? 0 : a, hi = lower ? a - 1 : m;
  long double total = 0.0L;
  const long double log_half_m = m * std::log(0.5L);
  for (int k = lo; k <= hi; ++k) {
    const long double lc = std::lgamma(static_cast<long double>(m) + 1) - std::lgamma(static_cast<long double>(k) + 1) -
                           std::lgamma(static_cast<long double>(m - k) + 1);
    total += std::exp(lc + log_half_m);
  }
  return static_cast<double>(lower ? total : 1.0L - total);
}

/// Posterior probability that the pathway share exceeds 1/2, for y of N
/// members in the cluster under a Bin(N, theta) likelihood and Beta(1, 1) prior.
inline double enrichment_probability(int y, int N) {
  if (N < 1) throw InputError("enrichment_probability: N must be >= 1");
  if (y < 0 || y > N) throw InputError("enrichment_probability: y must lie in [0, N]");
  return beta_upper_tail_half(y + 1, N - y + 1);
}

struct PathwayMap {
  std::vector<std::string> pathways;
  std::vector<std::vector<std::string>> members;  // per pathway

  void add(const std::string& pathway, const std::string& variable) {
    auto it = std::find(pathways.begin(), pathways.end(), pathway);
    if (it == pathways.end()) {
      pathways.push_back(pathway);
      members.emplace_back();
      it = pathways.end() - 1;
    }
    auto& m = members[static_cast<std::size_t>(it - pathways.begin())];
    if (std::find(m.begin(), m.end(), variable) == m.end()) m.push_back(variable);
  }
};

struct EnrichmentMatrix {
  Matrix P;                            // clusters x pathways
  std::vector<int> cluster_ids;        // 1-based labels of the retained clusters
  std::vector<int> cluster_sizes;
  std::vector<std::string> pathways;
  std::vector<int> pathway_sizes;      // N_j after dropping absent members
  std::vector<std::string> warnings;

  static constexpr double enriched_threshold = 0.5;
};

/// Enrichment probabilities for every cluster with at least min_cluster_size
/// members against every pathway. Pathway members missing from `names` are
/// dropped with a warning; pathways left empty are skipped.
inline EnrichmentMatrix enrichment_matrix(const Clustering& clusters, const std::vector<std::string>& names,
                                          const PathwayMap& pathways, int min_cluster_size = 4) {
  if (min_cluster_size < 1) throw InputError("min_cluster_size must be >= 1");
  if (names.size() != clusters.size()) throw InputError("cluster labels and variable names differ in length");
  std::unordered_map<std::string, int> label_of;
  for (std::size_t i = 0; i < names.size(); ++i) label_of[names[i]] = clusters.labels[i];

  EnrichmentMatrix out;
  const auto sizes = clusters.cluster_sizes();
  for (int c = 0; c < clusters.k; ++c)
    if (sizes[c] >= min_cluster_size) {
      out.cluster_ids.push_back(c + 1);
      out.cluster_sizes.push_back(sizes[c]);
    }

  std::vector<std::vector<int>> counts;  // per kept pathway, per cluster label
  for (std::size_t j = 0; j < pathways.pathways.size(); ++j) {
    std::vector<int> per_cluster(static_cast<std::size_t>(clusters.k), 0);
    int present = 0;
    for (const auto& v : pathways.members[j]) {
      auto it = label_of.find(v);
      if (it == label_of.end()) {
        out.warnings.push_back("pathway '" + pathways.pathways[j] + "': member '" + v + "' not in dataset, dropped");
        continue;
      }
      ++present;
      ++per_cluster[it->second];
    }
    if (present == 0) {
      out.warnings.push_back("pathway '" + pathways.pathways[j] + "' has no members in the dataset, skipped");
      continue;
    }
    out.pathways.push_back(pathways.pathways[j]);
    out.pathway_sizes.push_back(present);
    counts.push_back(std::move(per_cluster));
  }

  out.P.resize(static_cast<Eigen::Index>(out.cluster_ids.size()), static_cast<Eigen::Index>(out.pathways.size()));
  for (std::size_t r = 0; r < out.cluster_ids.size(); ++r)
    for (std::size_t j = 0; j < out.pathways.size(); ++j)
      out.P(r, j) = enrichment_probability(counts[j][out.cluster_ids[r] - 1], out.pathway_sizes[j]);
  return out;
}

/// Heatmap CSV: rows are pathways, columns are clusters.
inline std::string enrichment_heatmap_csv(const EnrichmentMatrix& m) {
  std::ostringstream os;
  os.precision(10);
  os << "pathway";
  for (int id : m.cluster_ids) os << ",cluster_" << id;
  os << '\n';
  for (std::size_t j = 0; j < m.pathways.size(); ++j) {
    os << m.pathways[j];
    for (Eigen::Index r = 0; r < m.P.rows(); ++r) os << ',' << m.P(r, static_cast<Eigen::Index>(j));
    os << '\n';
  }
  return os.str();
}

inline nlohmann::json enriched_pairs_json(const EnrichmentMatrix& m) {
  nlohmann::json pairs = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.P.rows(); ++r)
    for (Eigen::Index j = 0; j < m.P.cols(); ++j)
      if (m.P(r, j) > EnrichmentMatrix::enriched_threshold)
        pairs.push_back({{"cluster", m.cluster_ids[r]},
                         {"cluster_size", m.cluster_sizes[r]},
                         {"pathway", m.pathways[j]},
                         {"pathway_size", m.pathway_sizes[j]},
                         {"probability", m.P(r, j)}});
  return {{"threshold", EnrichmentMatrix::enriched_threshold}, {"enriched", pairs}, {"warnings", m.warnings}};
}

}  // namespace bngc
