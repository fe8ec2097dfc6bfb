#pragma once

// External clustering scores. Natural logarithms throughout; 0 log 0 := 0.

#include "bngc/core.hpp"

#include <cmath>
#include <map>
#include <utility>
#include <vector>

namespace bngc {

inline double entropy(const std::vector<int>& labels) {
  std::map<int, int> counts;
  for (int l : labels) ++counts[l];
  const double p = static_cast<double>(labels.size());
  double h = 0.0;
  for (const auto& [label, c] : counts) {
    const double f = c / p;
    h -= f * std::log(f);
  }
  return h;
}

inline double entropy(const Clustering& c) { return entropy(c.labels); }

inline double mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw InputError("partitions must cover the same number of items");
  std::map<int, int> ca, cb;
  std::map<std::pair<int, int>, int> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++ca[a[i]];
    ++cb[b[i]];
    ++joint[{a[i], b[i]}];
  }
  const double p = static_cast<double>(a.size());
  double mi = 0.0;
  for (const auto& [key, n] : joint)
    mi += n / p * std::log(p * n / (static_cast<double>(ca[key.first]) * cb[key.second]));
  return mi;
}

enum class NmiConvention { none, both_trivial, one_trivial };

struct NmiResult {
  double value = 0.0;
  NmiConvention convention = NmiConvention::none;
};

/// MI / sqrt(H(truth) H(estimate)). Trivial (single-cluster) partitions make
/// the ratio undefined: both trivial gives 1, exactly one trivial gives 0,
/// and the returned flag says which convention applied.
inline NmiResult nmi_detailed(const std::vector<int>& truth, const std::vector<int>& estimate) {
  if (truth.size() != estimate.size()) throw InputError("partitions must cover the same number of items");
  if (truth.empty()) throw InputError("partitions must be nonempty");
  const double ht = entropy(truth);
  const double he = entropy(estimate);
  if (ht == 0.0 && he == 0.0) return {1.0, NmiConvention::both_trivial};
  if (ht == 0.0 || he == 0.0) return {0.0, NmiConvention::one_trivial};
  const double v = mutual_information(truth, estimate) / std::sqrt(ht * he);
  return {std::clamp(v, 0.0, 1.0), NmiConvention::none};
}

inline double nmi(const std::vector<int>& truth, const std::vector<int>& estimate) {
  return nmi_detailed(truth, estimate).value;
}

inline double nmi(const Clustering& truth, const Clustering& estimate) { return nmi(truth.labels, estimate.labels); }

/// Sum of w_ij over unordered pairs {i, j} placed in different clusters.
inline double between_cluster_edge_density(const Matrix& W, const std::vector<int>& labels) {
  if (W.rows() != W.cols() || W.rows() != static_cast<Eigen::Index>(labels.size()))
    throw InputError("edge density: adjacency and labels disagree in size");
  double s = 0.0;
  for (Eigen::Index i = 0; i < W.rows(); ++i)
    for (Eigen::Index j = i + 1; j < W.cols(); ++j)
      if (labels[i] != labels[j]) s += W(i, j);
  return s;
}

inline double between_cluster_edge_density(const WeightedAdjacency& adj, const Clustering& est) {
  return between_cluster_edge_density(adj.W, est.labels);
}

/// Sum of w_ij over unordered pairs sharing a cluster.
inline double within_cluster_weight(const Matrix& W, const std::vector<int>& labels) {
  if (W.rows() != static_cast<Eigen::Index>(labels.size()))
    throw InputError("within weight: adjacency and labels disagree in size");
  double s = 0.0;
  for (Eigen::Index i = 0; i < W.rows(); ++i)
    for (Eigen::Index j = i + 1; j < W.cols(); ++j)
      if (labels[i] == labels[j]) s += W(i, j);
  return s;
}

}  // namespace bngc
