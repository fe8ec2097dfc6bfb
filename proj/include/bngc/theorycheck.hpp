#pragma once

// Empirical checks of the Laplacian perturbation results: the operator-norm
// bound on L - L_true in terms of W - W_true, Weyl closeness of the spectra,
// and the sin-theta bound on the null-space eigenvectors.

#include "bngc/random.hpp"
#include "bngc/spectral.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace bngc {

/// Largest absolute eigenvalue of a symmetric matrix.
inline double operator_norm(const Matrix& A) {
  if (A.rows() != A.cols()) throw InputError("operator_norm: matrix must be square");
  if (A.size() == 0) return 0.0;
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10) throw InputError("operator_norm: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Decomposition of an arbitrary symmetric matrix, tagged with a variant.
inline SpectralDecomposition decompose_symmetric(const Matrix& L, LaplacianVariant variant = LaplacianVariant::sym) {
  SpectralDecomposition dec;
  dec.variant = variant;
  dec.laplacian = L;
  Eigen::SelfAdjointEigenSolver<Matrix> es(L);
  if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver did not converge");
  dec.eigenvalues = es.eigenvalues();
  dec.eigenvectors = es.eigenvectors();
  return dec;
}

struct LaplacianBoundReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double kappa = 0.5;
  bool kappa_from_estimate = false;
  double min_degree = 0.0;
  double max_degree = 0.0;
  double degree_floor = 0.0;  // p^{1/2} (log p)^{-1/2}
  bool tau_check = false;     // min degree above the floor (both graphs)
  bool degree_cap_ok = false; // max degree <= p^kappa
  bool holds = false;

  bool assumptions_ok() const { return tau_check && degree_cap_ok; }
};

inline nlohmann::json to_json(const LaplacianBoundReport& r) {
  return {{"lhs", r.lhs},
          {"rhs", r.rhs},
          {"kappa", r.kappa},
          {"kappa_from_estimate", r.kappa_from_estimate},
          {"min_degree", r.min_degree},
          {"max_degree", r.max_degree},
          {"degree_floor", r.degree_floor},
          {"tau_check", r.tau_check},
          {"degree_cap_ok", r.degree_cap_ok},
          {"holds", r.holds}};
}

namespace detail {

inline LaplacianBoundReport laplacian_bound(const Matrix& W_hat, const Matrix& W_ref, bool ref_is_truth) {
  if (W_hat.rows() != W_ref.rows() || W_hat.cols() != W_ref.cols())
    throw InputError("laplacian bound: adjacency sizes differ");
  LaplacianBoundReport r;
  const double p = static_cast<double>(W_hat.rows());
  r.lhs = operator_norm(sym_laplacian(W_hat) - sym_laplacian(W_ref));
  const Vector d_ref = W_ref.rowwise().sum();
  const Vector d_hat = W_hat.rowwise().sum();
  r.min_degree = std::min(d_ref.minCoeff(), d_hat.minCoeff());
  r.max_degree = d_ref.maxCoeff();
  r.kappa_from_estimate = !ref_is_truth;
  const double logp = std::log(p);
  const double kappa_raw = r.max_degree > 0 && p > 1 ? std::log(r.max_degree) / logp : 0.5;
  r.kappa = std::clamp(kappa_raw, 0.5, std::nextafter(1.0, 0.0));
  r.degree_floor = std::sqrt(p) / std::sqrt(logp);
  r.tau_check = p > 1 && r.min_degree > r.degree_floor;
  r.degree_cap_ok = kappa_raw < 1.0 && r.max_degree <= std::pow(p, r.kappa) * (1 + 1e-12);
  r.rhs = std::pow(logp, 0.75) * std::pow(p, r.kappa - 0.25) * (W_hat - W_ref).norm();
  r.holds = r.lhs <= r.rhs + 1e-12;
  return r;
}

}  // namespace detail

/// Both sides of ||L - L_true|| <= (log p)^{3/4} p^{kappa - 1/4} ||W - W_true||_F
/// for the normalized Laplacian, with kappa taken from the true max degree.
inline LaplacianBoundReport check_laplacian_bound(const WeightedAdjacency& W_hat, const WeightedAdjacency& W_true) {
  return detail::laplacian_bound(W_hat.W, W_true.W, true);
}

/// Same report when no truth exists: kappa from the estimated degrees, flagged.
inline LaplacianBoundReport check_laplacian_bound(const WeightedAdjacency& W_hat, const WeightedAdjacency& W_ref,
                                                  bool ref_is_truth) {
  return detail::laplacian_bound(W_hat.W, W_ref.W, ref_is_truth);
}

/// max_i |eig_i(L_hat) - eig_i(L_true)|.
inline double weyl_gap(const SpectralDecomposition& L_hat, const SpectralDecomposition& L_true) {
  if (L_hat.variant != L_true.variant) throw InputError("weyl_gap: Laplacian variants differ");
  if (L_hat.size() != L_true.size()) throw InputError("weyl_gap: sizes differ");
  if (L_hat.size() == 0) return 0.0;
  return (L_hat.eigenvalues - L_true.eigenvalues).cwiseAbs().maxCoeff();
}

namespace detail {

inline void require_orthonormal(const Matrix& V, const char* what) {
  const Matrix G = V.transpose() * V;
  if ((G - Matrix::Identity(V.cols(), V.cols())).cwiseAbs().maxCoeff() > 1e-8)
    throw InputError(std::string(what) + " does not have orthonormal columns");
}

}  // namespace detail

/// ||sin Theta(V_hat, V)||_2: the sine of the largest principal angle between
/// the column spans, evaluated as ||(I - V V^T) V_hat||_2.
inline double sin_theta_distance(const Matrix& V_hat, const Matrix& V) {
  if (V_hat.rows() != V.rows() || V_hat.cols() != V.cols()) throw InputError("sin_theta_distance: shapes differ");
  detail::require_orthonormal(V_hat, "V_hat");
  detail::require_orthonormal(V, "V");
  if (V.cols() == 0) return 0.0;
  const Matrix residual = V_hat - V * (V.transpose() * V_hat);
  Eigen::JacobiSVD<Matrix> svd(residual);
  return std::clamp(svd.singularValues()(0), 0.0, 1.0);
}

struct SinThetaReport {
  int d = 0;
  double sin_theta_op = 0.0;
  double delta = 0.0;
  double perturbation = 0.0;  // ||L_hat - L_true||_2
  double bound = 0.0;
  double eps_n = 0.0;         // d-th smallest eigenvalue of L_hat
  bool gap_ok = false;
  bool holds = false;
};

inline nlohmann::json to_json(const SinThetaReport& r) {
  return {{"d", r.d},
          {"sin_theta_op", r.sin_theta_op},
          {"delta", r.delta},
          {"perturbation", r.perturbation},
          {"bound", r.bound},
          {"eps_n", r.eps_n},
          {"gap_ok", r.gap_ok},
          {"holds", r.holds}};
}

/// Compares the d-dimensional null space of L_true with the eigenvectors of
/// the d smallest eigenvalues of L_hat against ||L_hat - L_true|| / delta.
inline SinThetaReport check_davis_kahan(const SpectralDecomposition& L_hat, const SpectralDecomposition& L_true,
                                        int d) {
  if (L_hat.size() != L_true.size()) throw InputError("check_davis_kahan: sizes differ");
  if (L_hat.variant != L_true.variant) throw InputError("check_davis_kahan: Laplacian variants differ");
  const int p = static_cast<int>(L_true.size());
  if (d < 1 || d >= p) throw InputError("check_davis_kahan: d must lie in [1, p-1]");
  const int zeros = count_small_eigenvalues(L_true.eigenvalues, 1e-10);
  if (d > zeros) throw InputError("check_davis_kahan: d exceeds the zero multiplicity of the true Laplacian");
  SinThetaReport r;
  r.d = d;
  r.delta = L_true.eigenvalues(d);
  if (!(r.delta > 1e-10)) throw InputError("check_davis_kahan: no eigen-gap after the first d eigenvalues");
  r.perturbation = operator_norm(L_hat.laplacian - L_true.laplacian);
  r.bound = r.perturbation / r.delta;
  r.eps_n = L_hat.eigenvalues(d - 1);
  r.gap_ok = r.delta > 2.0 * r.eps_n;
  r.sin_theta_op = sin_theta_distance(L_hat.eigenvectors.leftCols(d), L_true.eigenvectors.leftCols(d));
  r.holds = r.sin_theta_op <= r.bound + 1e-12;
  return r;
}

// Randomized validation suites ---------------------------------------------

struct ValidationSummary {
  std::string name;
  int attempts = 0;
  int qualifying = 0;  // trials whose assumptions held
  int violations = 0;
  double worst_ratio = 0.0;  // max lhs / rhs over qualifying trials
  bool passed() const { return violations == 0 && qualifying > 0; }
};

inline nlohmann::json to_json(const ValidationSummary& s) {
  return {{"name", s.name},
          {"attempts", s.attempts},
          {"qualifying", s.qualifying},
          {"violations", s.violations},
          {"worst_ratio", s.worst_ratio},
          {"passed", s.passed()}};
}

namespace detail {

inline Matrix symmetric_noise(int p, double scale, Rng& rng) {
  Matrix E = Matrix::Zero(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) E(i, j) = E(j, i) = scale * (2.0 * uniform01(rng) - 1.0);
  return E;
}

inline Matrix perturb_weights(const Matrix& W, double scale, Rng& rng) {
  Matrix Wp = (W + symmetric_noise(static_cast<int>(W.rows()), scale, rng)).cwiseMax(0.0);
  Wp.diagonal().setZero();
  return Wp;
}

/// Block-diagonal weights: `blocks` components, dense within, none across.
inline Matrix random_block_graph(const std::vector<int>& labels, double lo, double hi, Rng& rng) {
  const int p = static_cast<int>(labels.size());
  Matrix W = Matrix::Zero(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      if (labels[i] == labels[j]) W(i, j) = W(j, i) = lo + (hi - lo) * uniform01(rng);
  return W;
}

}  // namespace detail

/// Dense random graphs (p in [20, 80], weights U(0.5, 1)) with small symmetric
/// perturbations; counts bound violations among trials meeting the degree
/// assumptions.
inline ValidationSummary run_laplacian_bound_suite(int trials, std::uint64_t seed) {
  ValidationSummary s;
  s.name = "laplacian_operator_bound";
  Rng rng = make_stream(seed, "theorycheck-laplacian");
  while (s.qualifying < trials && s.attempts < 20 * trials) {
    ++s.attempts;
    const int p = uniform_int(rng, 20, 80);
    Matrix W = Matrix::Zero(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j)
        if (uniform01(rng) < 0.9) W(i, j) = W(j, i) = 0.5 + 0.5 * uniform01(rng);
    const double scale = std::pow(10.0, -3.0 + 2.0 * uniform01(rng));
    const Matrix Wp = detail::perturb_weights(W, scale, rng);
    const auto r = check_laplacian_bound(WeightedAdjacency{Wp, {}}, WeightedAdjacency{W, {}});
    if (!r.assumptions_ok()) continue;
    ++s.qualifying;
    if (!r.holds) ++s.violations;
    if (r.rhs > 0) s.worst_ratio = std::max(s.worst_ratio, r.lhs / r.rhs);
  }
  return s;
}

/// Random block graphs (p in [20, 60], 2-6 components) with perturbations that
/// add cross-component weights; counts sin-theta bound violations among
/// trials with delta > 2 eps_n.
inline ValidationSummary run_davis_kahan_suite(int trials, std::uint64_t seed) {
  ValidationSummary s;
  s.name = "davis_kahan_sin_theta";
  Rng rng = make_stream(seed, "theorycheck-davis-kahan");
  while (s.qualifying < trials && s.attempts < 20 * trials) {
    ++s.attempts;
    const int p = uniform_int(rng, 20, 60);
    const int blocks = uniform_int(rng, 2, 6);
    std::vector<int> labels(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) labels[i] = i < blocks ? i : uniform_int(rng, 0, blocks - 1);
    const Matrix W = detail::random_block_graph(labels, 0.3, 1.0, rng);
    const double scale = std::pow(10.0, -3.0 + 2.0 * uniform01(rng));
    const Matrix Wp = detail::perturb_weights(W, scale, rng);
    const auto truth = build_laplacian(WeightedAdjacency{W, {}});
    const auto est = build_laplacian(WeightedAdjacency{Wp, {}});
    const auto r = check_davis_kahan(est, truth, blocks);
    if (!r.gap_ok) continue;
    ++s.qualifying;
    if (!r.holds) ++s.violations;
    if (r.bound > 0) s.worst_ratio = std::max(s.worst_ratio, r.sin_theta_op / r.bound);
  }
  return s;
}

}  // namespace bngc
