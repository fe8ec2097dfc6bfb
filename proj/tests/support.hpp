#pragma once

#include "bngc/bngc.hpp"

#include <gtest/gtest.h>

#include <queue>
#include <random>
#include <set>

namespace testing_support {

using bngc::Matrix;
using bngc::Vector;

/// Component count of the support of W by breadth-first search.
inline int bfs_components(const Matrix& W) {
  const auto p = W.rows();
  std::vector<bool> seen(static_cast<std::size_t>(p), false);
  int comps = 0;
  for (Eigen::Index s = 0; s < p; ++s) {
    if (seen[s]) continue;
    ++comps;
    std::queue<Eigen::Index> q;
    q.push(s);
    seen[s] = true;
    while (!q.empty()) {
      const auto v = q.front();
      q.pop();
      for (Eigen::Index u = 0; u < p; ++u)
        if (!seen[u] && W(v, u) > 0) {
          seen[u] = true;
          q.push(u);
        }
    }
  }
  return comps;
}

/// Random block-diagonal weights: `blocks` groups scattered over p vertices,
/// each group connected (a random spanning path plus extra edges).
inline Matrix random_block_graph(int p, int blocks, std::mt19937_64& rng, std::vector<int>* labels_out = nullptr) {
  std::uniform_int_distribution<int> pick(0, blocks - 1);
  std::uniform_real_distribution<double> w(0.1, 1.0), coin(0.0, 1.0);
  std::vector<int> labels(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) labels[i] = i < blocks ? i : pick(rng);
  std::shuffle(labels.begin(), labels.end(), rng);
  Matrix W = Matrix::Zero(p, p);
  for (int b = 0; b < blocks; ++b) {
    std::vector<int> members;
    for (int i = 0; i < p; ++i)
      if (labels[i] == b) members.push_back(i);
    for (std::size_t k = 1; k < members.size(); ++k) {
      const double v = w(rng);
      W(members[k - 1], members[k]) = W(members[k], members[k - 1]) = v;
    }
    for (std::size_t a = 0; a < members.size(); ++a)
      for (std::size_t c = a + 2; c < members.size(); ++c)
        if (coin(rng) < 0.3) {
          const double v = w(rng);
          W(members[a], members[c]) = W(members[c], members[a]) = v;
        }
  }
  if (labels_out) *labels_out = labels;
  return W;
}

inline Matrix random_orthogonal(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Matrix A(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) A(i, j) = n01(rng);
  Eigen::HouseholderQR<Matrix> qr(A);
  return qr.householderQ() * Matrix::Identity(d, d);
}

/// Two well-separated blobs in the plane, `per` points each.
inline Matrix two_blobs(int per, double spread, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Matrix Y(2 * per, 2);
  for (int i = 0; i < 2 * per; ++i) {
    const double cx = i < per ? -1.0 : 1.0;
    Y(i, 0) = cx + spread * n01(rng);
    Y(i, 1) = spread * n01(rng);
  }
  return Y;
}

/// Samples from N(0, Omega^-1).
inline bngc::DataMatrix sample_from_precision(const Matrix& omega, int n, std::uint64_t seed) {
  const Matrix sigma = omega.inverse();
  const Eigen::LLT<Matrix> llt(sigma);
  const Matrix Lc = llt.matrixL();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  bngc::DataMatrix d;
  const auto p = omega.rows();
  d.values.resize(n, p);
  for (int i = 0; i < n; ++i) {
    Vector z(p);
    for (Eigen::Index j = 0; j < p; ++j) z(j) = n01(rng);
    d.values.row(i) = (Lc * z).transpose();
  }
  d.names = bngc::default_names(p);
  return d;
}

/// All set partitions of {0..n-1} as restricted growth strings.
inline void enumerate_partitions(int n, std::vector<int>& cur, int max_label, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == n) {
    out.push_back(cur);
    return;
  }
  for (int l = 0; l <= max_label + 1; ++l) {
    cur.push_back(l);
    enumerate_partitions(n, cur, std::max(max_label, l), out);
    cur.pop_back();
  }
}

inline std::vector<std::vector<int>> all_partitions(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  enumerate_partitions(n, cur, -1, out);
  return out;
}

inline int block_count(const std::vector<int>& rgs) { return *std::max_element(rgs.begin(), rgs.end()) + 1; }

/// Upper 0.999 quantile of chi-squared via the Wilson-Hilferty approximation.
inline double chi2_upper(double df, double z = 3.09) {
  const double a = 2.0 / (9.0 * df);
  return df * std::pow(1.0 - a + z * std::sqrt(a), 3.0);
}

}  // namespace testing_support
