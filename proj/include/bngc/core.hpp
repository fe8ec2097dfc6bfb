#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace bngc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Error categories map one-to-one onto CLI exit codes (1, 2, 3).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// n samples x p variables with variable names.
struct DataMatrix {
  Matrix values;
  std::vector<std::string> names;

  Eigen::Index n() const { return values.rows(); }
  Eigen::Index p() const { return values.cols(); }
};

inline std::vector<std::string> default_names(Eigen::Index p) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(p));
  for (Eigen::Index i = 0; i < p; ++i) names.push_back("X" + std::to_string(i + 1));
  return names;
}

/// Symmetric nonnegative weights with zero diagonal.
struct WeightedAdjacency {
  Matrix W;
  std::vector<std::string> names;

  Eigen::Index size() const { return W.rows(); }
};

inline void validate(const WeightedAdjacency& adj, double tol = 1e-12) {
  const Matrix& W = adj.W;
  if (W.rows() != W.cols()) throw InputError("adjacency must be square");
  for (Eigen::Index i = 0; i < W.rows(); ++i) {
    if (std::abs(W(i, i)) > tol) throw InputError("adjacency diagonal must be zero");
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
      if (!std::isfinite(W(i, j)) || W(i, j) < -tol)
        throw InputError("adjacency weights must be finite and nonnegative");
      if (std::abs(W(i, j) - W(j, i)) > tol) throw InputError("adjacency must be symmetric");
    }
  }
}

/// A hard partition of p items. Labels are 0-based and contiguous in memory;
/// file formats write them 1-based.
struct Clustering {
  std::vector<int> labels;
  int k = 0;
  Matrix centers;  // k x dim, may be empty
  double objective = 0.0;
  std::string method;

  std::size_t size() const { return labels.size(); }

  std::vector<int> cluster_sizes() const {
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
    return sizes;
  }
};

/// Relabels in order of first appearance so labels become 0..k-1. Returns k.
inline int compact_labels(std::vector<int>& labels) {
  std::map<int, int> remap;
  for (int& l : labels) {
    auto [it, inserted] = remap.try_emplace(l, static_cast<int>(remap.size()));
    l = it->second;
  }
  return static_cast<int>(remap.size());
}

inline Clustering make_clustering(std::vector<int> labels, std::string method = {}) {
  Clustering c;
  c.k = compact_labels(labels);
  c.labels = std::move(labels);
  c.method = std::move(method);
  return c;
}

/// True when both labelings induce the same set partition.
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::vector<int> ca(a), cb(b);
  compact_labels(ca);
  compact_labels(cb);
  return ca == cb;
}

}  // namespace bngc
