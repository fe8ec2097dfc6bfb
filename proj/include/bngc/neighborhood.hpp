#pragma once

// Bayesian neighborhood selection: one rescaled spike-and-slab regression per
// variable, sampled with stochastic variable selection (SVS) Gibbs sweeps, and
// combined into a model-averaged partial-correlation matrix.

#include "bngc/core.hpp"
#include "bngc/parallel.hpp"
#include "bngc/random.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace bngc {

struct SpikeSlabConfig {
  double a1 = 5.0;       // Gamma shape for tau^-2
  double a2 = 50.0;      // Gamma rate for tau^-2
  double b1 = 0.0001;    // Gamma shape for sigma^-2
  double b2 = 0.0001;    // Gamma rate for sigma^-2
  double nu0 = 0.005;    // spike variance scale
  int n_iter = 500;
  int n_burnin = 100;
  int thin = 1;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0 = hardware concurrency

  void validate() const {
    if (!(a1 > 0 && a2 > 0 && b1 > 0 && b2 > 0 && nu0 > 0))
      throw ConfigError("spike-slab hyperparameters a1, a2, b1, b2, nu0 must be positive");
    if (n_burnin < 0 || n_iter <= n_burnin)
      throw ConfigError("spike-slab requires n_iter > n_burnin >= 0");
    if (thin < 1) throw ConfigError("spike-slab thinning stride must be >= 1");
  }
};

struct RegressionPosterior {
  int index = 0;          // response variable l
  Vector beta_bar;        // (p-1) model-averaged coefficients, original scale
  Vector gamma_freq;      // (p-1) posterior inclusion frequencies
  double sigma2_bar = 0;  // posterior mean residual variance, original scale
};

struct PartialCorrelationEstimate {
  Matrix R;
  std::vector<std::string> names;
  SpikeSlabConfig config;
};

/// Positions of the regressors for response l, i.e. all j != l in order.
inline std::vector<int> regressor_indices(int p, int l) {
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(p - 1));
  for (int j = 0; j < p; ++j)
    if (j != l) idx.push_back(j);
  return idx;
}

namespace detail {

inline void check_data(const DataMatrix& data) {
  if (data.n() < 3) throw InputError("need at least 3 samples");
  if (data.p() < 2) throw InputError("need at least 2 variables");
  if (!data.values.allFinite()) throw InputError("data contains non-finite entries");
}

/// Centered and unit-variance columns plus the per-column scale used.
struct Standardized {
  Matrix Z;
  Vector scale;
};

inline Standardized standardize(const Matrix& X) {
  Standardized s;
  s.Z = X.rowwise() - X.colwise().mean();
  s.scale.resize(X.cols());
  const double n = static_cast<double>(X.rows());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double sd = std::sqrt(s.Z.col(j).squaredNorm() / n);
    // Constant columns stay all-zero with unit scale.
    s.scale(j) = sd > 0 ? sd : 1.0;
    s.Z.col(j) /= s.scale(j);
  }
  return s;
}

/// SVS Gibbs chain for one response, working entirely from the Gram matrix of
/// the standardized data. Returned coefficients are on the standardized,
/// sqrt(n)-rescaled scale.
struct ChainSummary {
  Vector beta_mean;
  Vector gamma_freq;
  double sigma2_mean = 0;
};

inline ChainSummary run_svs_chain(const Matrix& gram, int l, double n, const SpikeSlabConfig& cfg,
                                  Rng& rng) {
  const int p = static_cast<int>(gram.rows());
  const std::vector<int> idx = regressor_indices(p, l);
  const int q = p - 1;

  // Sufficient statistics of the rescaled response X*_l = sqrt(n) X_l.
  Matrix xtx(q, q);
  Vector xty(q);
  for (int a = 0; a < q; ++a) {
    xty(a) = std::sqrt(n) * gram(idx[a], l);
    for (int b = 0; b < q; ++b) xtx(a, b) = gram(idx[a], idx[b]);
  }
  const double yty = n * gram(l, l);

  Vector beta = Vector::Zero(q);
  Vector gamma = Vector::Ones(q);
  Vector tau2 = Vector::Constant(q, cfg.a2 / cfg.a1);
  double u = 0.5;
  double sigma2 = 1.0;

  ChainSummary out;
  out.beta_mean = Vector::Zero(q);
  out.gamma_freq = Vector::Zero(q);
  int kept = 0;

  Matrix A(q, q);
  Eigen::LLT<Matrix> llt;
  const double log_nu0 = std::log(cfg.nu0);

  for (int it = 0; it < cfg.n_iter; ++it) {
    // Step 1: beta | lambda, sigma2 ~ N(Sigma X'X*, n sigma2 Sigma),
    // Sigma = (X'X + n sigma2 Lambda^-1)^-1.
    A = xtx;
    for (int j = 0; j < q; ++j) A(j, j) += n * sigma2 / (gamma(j) * tau2(j));
    llt.compute(A);
    if (llt.info() != Eigen::Success) {
      A.diagonal().array() += 1e-8;
      llt.compute(A);
      if (llt.info() != Eigen::Success) throw NumericalError("spike-slab precision factorization failed");
    }
    Vector mean = llt.solve(xty);
    Vector z = standard_normal_vector(rng, q);
    llt.matrixU().solveInPlace(z);  // z ~ N(0, A^-1)
    beta = mean + std::sqrt(n * sigma2) * z;
    if (!beta.allFinite()) throw NumericalError("spike-slab coefficient draw is not finite");

    // Step 2: gamma_j in {nu0, 1}.
    for (int j = 0; j < q; ++j) {
      const double beta_sq = beta(j) * beta(j);
      const double log_u1 = std::log1p(-u) - 0.5 * log_nu0 - beta_sq / (2.0 * cfg.nu0 * tau2(j));
      const double log_u2 = std::log(u) - beta_sq / (2.0 * tau2(j));
      const double p_spike = 1.0 / (1.0 + std::exp(log_u2 - log_u1));
      gamma(j) = uniform01(rng) < p_spike ? cfg.nu0 : 1.0;
    }

    // Step 3: tau^-2 | beta, gamma.
    for (int j = 0; j < q; ++j) {
      const double rate = cfg.a2 + beta(j) * beta(j) / (2.0 * gamma(j));
      tau2(j) = 1.0 / gamma_shape_rate(rng, cfg.a1 + 0.5, rate);
    }

    // Step 4: complexity weight u.
    int n_slab = 0;
    for (int j = 0; j < q; ++j) n_slab += gamma(j) == 1.0 ? 1 : 0;
    u = beta_draw(rng, 1.0 + n_slab, 1.0 + (q - n_slab));
    u = std::clamp(u, 1e-300, 1.0 - 1e-16);

    // Step 5: sigma^-2 | beta.
    const double rss = std::max(0.0, yty - 2.0 * beta.dot(xty) + beta.dot(xtx * beta));
    sigma2 = 1.0 / gamma_shape_rate(rng, cfg.b1 + n / 2.0, cfg.b2 + rss / (2.0 * n));

    // Step 6 (lambda = gamma tau^2) is implicit in the (gamma, tau2) pair.
    if (it >= cfg.n_burnin && (it - cfg.n_burnin) % cfg.thin == 0) {
      out.beta_mean += beta;
      for (int j = 0; j < q; ++j) out.gamma_freq(j) += gamma(j) == 1.0 ? 1.0 : 0.0;
      out.sigma2_mean += sigma2;
      ++kept;
    }
  }
  out.beta_mean /= kept;
  out.gamma_freq /= kept;
  out.sigma2_mean /= kept;
  return out;
}

inline RegressionPosterior to_original_scale(const ChainSummary& chain, int l, const Vector& scale,
                                             double n) {
  const int p = static_cast<int>(scale.size());
  const std::vector<int> idx = regressor_indices(p, l);
  RegressionPosterior post;
  post.index = l;
  post.beta_bar.resize(p - 1);
  for (int a = 0; a < p - 1; ++a)
    post.beta_bar(a) = chain.beta_mean(a) / std::sqrt(n) * scale(l) / scale(idx[a]);
  post.gamma_freq = chain.gamma_freq;
  post.sigma2_bar = chain.sigma2_mean * scale(l) * scale(l);
  return post;
}

}  // namespace detail

/// Model-averaged spike-and-slab regression of variable l on all others.
inline RegressionPosterior run_spike_slab_regression(const DataMatrix& data, int l,
                                                     const SpikeSlabConfig& cfg) {
  cfg.validate();
  detail::check_data(data);
  if (l < 0 || l >= data.p()) throw InputError("response index out of range");
  const auto s = detail::standardize(data.values);
  const Matrix gram = s.Z.transpose() * s.Z;
  const double n = static_cast<double>(data.n());
  Rng rng = make_stream(cfg.seed, "spike-slab", {static_cast<std::uint64_t>(l)});
  return detail::to_original_scale(detail::run_svs_chain(gram, l, n, cfg, rng), l, s.scale, n);
}

/// sign(b_lj) sqrt(b_lj b_jl); zero for sign-discordant pairs, clamped to [-1, 1].
inline double partial_correlation_from_coefficients(double b_lj, double b_jl) {
  const double prod = b_lj * b_jl;
  if (!(prod > 0)) return 0.0;
  const double r = std::min(1.0, std::sqrt(prod));
  return b_lj > 0 ? r : -r;
}

/// Combines p regression posteriors into the symmetric partial-correlation matrix.
inline Matrix partial_correlations_from_posteriors(const std::vector<RegressionPosterior>& posts) {
  const int p = static_cast<int>(posts.size());
  // B(l, j) = beta_{l(j)}
  Matrix B = Matrix::Zero(p, p);
  for (const auto& post : posts) {
    const auto idx = regressor_indices(p, post.index);
    for (int a = 0; a < p - 1; ++a) B(post.index, idx[a]) = post.beta_bar(a);
  }
  Matrix R = Matrix::Identity(p, p);
  for (int l = 0; l < p; ++l)
    for (int j = l + 1; j < p; ++j) R(l, j) = R(j, l) = partial_correlation_from_coefficients(B(l, j), B(j, l));
  return R;
}

/// Runs all p regressions (in parallel, one RNG stream per response) and
/// returns the partial correlations. `posteriors`, when given, receives the
/// per-regression summaries.
inline PartialCorrelationEstimate estimate_partial_correlations(
    const DataMatrix& data, const SpikeSlabConfig& cfg,
    std::vector<RegressionPosterior>* posteriors = nullptr) {
  cfg.validate();
  detail::check_data(data);
  const auto s = detail::standardize(data.values);
  const Matrix gram = s.Z.transpose() * s.Z;
  const double n = static_cast<double>(data.n());
  const int p = static_cast<int>(data.p());

  std::vector<RegressionPosterior> posts(static_cast<std::size_t>(p));
  const unsigned threads = cfg.threads == 0 ? default_thread_count() : cfg.threads;
  parallel_for(static_cast<std::size_t>(p), threads, [&](std::size_t l) {
    Rng rng = make_stream(cfg.seed, "spike-slab", {static_cast<std::uint64_t>(l)});
    const int li = static_cast<int>(l);
    posts[l] = detail::to_original_scale(detail::run_svs_chain(gram, li, n, cfg, rng), li, s.scale, n);
  });

  PartialCorrelationEstimate est;
  est.R = partial_correlations_from_posteriors(posts);
  est.names = data.names.empty() ? default_names(p) : data.names;
  est.config = cfg;
  if (posteriors) *posteriors = std::move(posts);
  return est;
}

/// W = |R| off the diagonal, zero diagonal.
inline WeightedAdjacency adjacency_from_partial_correlations(const PartialCorrelationEstimate& est) {
  WeightedAdjacency adj;
  adj.W = est.R.cwiseAbs();
  adj.W.diagonal().setZero();
  adj.names = est.names.empty() ? default_names(est.R.rows()) : est.names;
  return adj;
}

/// Partial correlations implied by a precision matrix: -w_lj / sqrt(w_ll w_jj).
inline Matrix partial_correlations_from_precision(const Matrix& omega) {
  const Eigen::Index p = omega.rows();
  Matrix R = Matrix::Identity(p, p);
  for (Eigen::Index l = 0; l < p; ++l)
    for (Eigen::Index j = 0; j < p; ++j)
      if (l != j) R(l, j) = -omega(l, j) / std::sqrt(omega(l, l) * omega(j, j));
  return R;
}

}  // namespace bngc
