#pragma once

#include "bngc/core.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace bngc {

enum class LaplacianVariant { unnormalized, sym, rw };

inline std::string to_string(LaplacianVariant v) {
  switch (v) {
    case LaplacianVariant::unnormalized: return "unnormalized";
    case LaplacianVariant::sym: return "sym";
    case LaplacianVariant::rw: return "rw";
  }
  return "sym";
}

inline LaplacianVariant parse_variant(const std::string& s) {
  if (s == "unnormalized" || s == "L") return LaplacianVariant::unnormalized;
  if (s == "sym" || s == "L_sym") return LaplacianVariant::sym;
  if (s == "rw" || s == "L_rw") return LaplacianVariant::rw;
  throw ConfigError("unknown Laplacian variant '" + s + "'");
}

struct SpectralDecomposition {
  LaplacianVariant variant = LaplacianVariant::sym;
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // columns; orthonormal except for rw
  Vector degrees;
  Matrix laplacian;     // the symmetric matrix that was diagonalized (L or L_sym)
  int embedding_dim = 0;
  std::vector<std::string> names;

  Eigen::Index size() const { return eigenvalues.size(); }
};

struct Embedding {
  Matrix Y;  // p x K_n
  LaplacianVariant variant = LaplacianVariant::sym;
  int dim = 0;
  bool row_normalized = false;
  std::vector<std::string> names;
};

/// L = D - W.
inline Matrix unnormalized_laplacian(const Matrix& W) {
  Matrix L = -W;
  L.diagonal() = W.rowwise().sum();
  return L;
}

/// L_sym = I - D^-1/2 W D^-1/2, with isolated vertices contributing a zero
/// row/column (so their diagonal entry is 0, not 1).
inline Matrix sym_laplacian(const Matrix& W) {
  const Vector d = W.rowwise().sum();
  Vector dinv = Vector::Zero(d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (d(i) > 0) dinv(i) = 1.0 / std::sqrt(d(i));
  Matrix L = -(dinv.asDiagonal() * W * dinv.asDiagonal());
  for (Eigen::Index i = 0; i < d.size(); ++i) L(i, i) += d(i) > 0 ? 1.0 : 0.0;
  return L;
}

/// L_rw = I - D^-1 W (not symmetric), same isolated-vertex convention.
inline Matrix rw_laplacian(const Matrix& W) {
  const Vector d = W.rowwise().sum();
  Matrix L = Matrix::Zero(W.rows(), W.cols());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d(i) <= 0) continue;
    L.row(i) = -W.row(i) / d(i);
    L(i, i) += 1.0;
  }
  return L;
}

inline Matrix laplacian_matrix(const Matrix& W, LaplacianVariant variant) {
  switch (variant) {
    case LaplacianVariant::unnormalized: return unnormalized_laplacian(W);
    case LaplacianVariant::sym: return sym_laplacian(W);
    case LaplacianVariant::rw: return rw_laplacian(W);
  }
  return sym_laplacian(W);
}

namespace detail {

// Largest-magnitude entry of every column made nonnegative (first on ties).
inline void fix_column_signs(Matrix& V) {
  for (Eigen::Index c = 0; c < V.cols(); ++c) {
    Eigen::Index best = 0;
    for (Eigen::Index r = 1; r < V.rows(); ++r)
      if (std::abs(V(r, c)) > std::abs(V(best, c))) best = r;
    if (V(best, c) < 0) V.col(c) *= -1.0;
  }
}

}  // namespace detail

/// Full eigendecomposition of the requested Laplacian, eigenvalues ascending.
/// For rw the spectrum is taken from L_sym and the eigenvectors are
/// D^-1/2 u, rescaled to unit length (they are not mutually orthogonal), and
/// `laplacian` holds the nonsymmetric L_rw itself.
inline SpectralDecomposition build_laplacian(const WeightedAdjacency& adj,
                                             LaplacianVariant variant = LaplacianVariant::sym) {
  validate(adj, 1e-10);
  SpectralDecomposition dec;
  dec.variant = variant;
  dec.names = adj.names;
  dec.degrees = adj.W.rowwise().sum();
  dec.laplacian = variant == LaplacianVariant::unnormalized ? unnormalized_laplacian(adj.W)
                                                            : sym_laplacian(adj.W);
  const Eigen::Index p = adj.size();
  if (p == 0) return dec;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(dec.laplacian);
  if (variant == LaplacianVariant::rw) dec.laplacian = rw_laplacian(adj.W);
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver did not converge");
  dec.eigenvalues = solver.eigenvalues();
  dec.eigenvectors = solver.eigenvectors();
  if (variant == LaplacianVariant::rw) {
    for (Eigen::Index i = 0; i < p; ++i) {
      const double d = dec.degrees(i);
      if (d > 0) dec.eigenvectors.row(i) /= std::sqrt(d);
    }
    for (Eigen::Index c = 0; c < p; ++c) {
      const double nrm = dec.eigenvectors.col(c).norm();
      if (nrm > 0) dec.eigenvectors.col(c) /= nrm;
    }
  }
  detail::fix_column_signs(dec.eigenvectors);
  return dec;
}

inline int count_small_eigenvalues(const Vector& eigenvalues, double threshold) {
  int c = 0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) c += eigenvalues(i) <= threshold ? 1 : 0;
  return c;
}

/// Number of near-zero eigenvalues when at least two exist; otherwise the
/// position of the largest consecutive gap among the first max_k+1 eigenvalues
/// (ties toward the smallest index). Result is clamped to [1, max_k].
/// max_k <= 0 selects ceil(p/2).
inline int choose_embedding_dimension(const Vector& eigenvalues, double eps_abs = 1e-6, int max_k = 0) {
  const int p = static_cast<int>(eigenvalues.size());
  if (p == 0) return 0;
  if (max_k <= 0) max_k = (p + 1) / 2;
  max_k = std::clamp(max_k, 1, p);
  const int zeros = count_small_eigenvalues(eigenvalues, eps_abs);
  if (zeros >= 2) return std::min(zeros, max_k);
  int best = 1;
  double best_gap = -1.0;
  for (int i = 1; i <= max_k && i < p; ++i) {
    const double gap = eigenvalues(i) - eigenvalues(i - 1);
    if (gap > best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  return best;
}

inline int choose_embedding_dimension(const SpectralDecomposition& dec, double eps_abs = 1e-6,
                                      int max_k = 0) {
  return choose_embedding_dimension(dec.eigenvalues, eps_abs, max_k);
}

/// Rows of the eigenvectors for the K_n smallest eigenvalues.
inline Embedding embed(const SpectralDecomposition& dec, int dim) {
  if (dim < 1 || dim > dec.size()) throw InputError("embedding dimension must lie in [1, p]");
  Embedding e;
  e.Y = dec.eigenvectors.leftCols(dim);
  e.variant = dec.variant;
  e.dim = dim;
  e.names = dec.names;
  return e;
}

/// Scales every nonzero row of the embedding to unit Euclidean length.
inline Embedding normalize_rows(Embedding e) {
  for (Eigen::Index r = 0; r < e.Y.rows(); ++r) {
    const double nrm = e.Y.row(r).norm();
    if (nrm > 0) e.Y.row(r) /= nrm;
  }
  e.row_normalized = true;
  return e;
}

/// Connected components of the support of W via union-find; labels 0-based in
/// order of first appearance.
inline std::vector<int> connected_components(const Matrix& W, double threshold = 0.0) {
  const Eigen::Index p = W.rows();
  std::vector<int> parent(static_cast<std::size_t>(p));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = i + 1; j < p; ++j)
      if (W(i, j) > threshold) {
        const int a = find(static_cast<int>(i)), b = find(static_cast<int>(j));
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
  std::vector<int> labels(static_cast<std::size_t>(p));
  for (Eigen::Index i = 0; i < p; ++i) labels[i] = find(static_cast<int>(i));
  compact_labels(labels);
  return labels;
}

}  // namespace bngc
