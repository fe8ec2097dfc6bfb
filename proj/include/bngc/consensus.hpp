#pragma once

// Consensus clustering of the same p variables across J data sources: each
// source has its own K-component Gaussian mixture over its embedded points
// (local labels) tied to one shared global labeling through an adherence
// parameter alpha_j in [1/K, 1].

#include "bngc/dpcluster.hpp"
#include "bngc/random.hpp"
#include "bngc/spectral.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

namespace bngc {

struct ConsensusConfig {
  int K = 2;
  double dirichlet_conc = 1.0;
  std::vector<double> sigma{0.01};  // per source, or one value for all
  std::vector<double> rho{1.0};
  int n_iter = 1000;
  int n_burnin = 200;
  std::uint64_t seed = 0;
  std::optional<double> fixed_alpha;  // holds every alpha_j constant when set

  double sigma_for(std::size_t j) const { return sigma.size() == 1 ? sigma[0] : sigma.at(j); }
  double rho_for(std::size_t j) const { return rho.size() == 1 ? rho[0] : rho.at(j); }

  void validate(std::size_t sources) const {
    if (K < 2) throw ConfigError("consensus requires K >= 2");
    if (!(dirichlet_conc > 0)) throw ConfigError("consensus Dirichlet concentration must be positive");
    if (n_burnin < 0 || n_iter <= n_burnin) throw ConfigError("consensus requires n_iter > n_burnin >= 0");
    if (sigma.empty() || rho.empty() || (sigma.size() != 1 && sigma.size() != sources) ||
        (rho.size() != 1 && rho.size() != sources))
      throw ConfigError("consensus sigma/rho must have one value or one per source");
    for (double s : sigma)
      if (!(s > 0)) throw ConfigError("consensus sigma must be positive");
    for (double r : rho)
      if (!(r > 0)) throw ConfigError("consensus rho must be positive");
    if (fixed_alpha && (*fixed_alpha < 1.0 / K - 1e-12 || *fixed_alpha > 1.0))
      throw ConfigError("fixed alpha must lie in [1/K, 1]");
  }
};

namespace detail {

inline void check_alpha(double alpha, int K) {
  if (K < 2) throw InputError("K must be >= 2");
  if (!(alpha >= 1.0 / K - 1e-12 && alpha <= 1.0 + 1e-12)) throw InputError("alpha must lie in [1/K, 1]");
}

}  // namespace detail

/// alpha when the local label equals the global one, (1 - alpha)/(K - 1) otherwise.
inline double dependence_function(int local_k, int global_k, double alpha, int K) {
  detail::check_alpha(alpha, K);
  if (local_k < 0 || local_k >= K || global_k < 0 || global_k >= K) throw InputError("labels must lie in [0, K)");
  return local_k == global_k ? alpha : (1.0 - alpha) / (K - 1);
}

/// Marginal probability of local label k: pi_k alpha + (1 - pi_k)(1 - alpha)/(K - 1).
inline double local_cluster_probability(int k, const std::vector<double>& pi, double alpha, int K) {
  detail::check_alpha(alpha, K);
  if (static_cast<int>(pi.size()) != K) throw InputError("pi must have K entries");
  double total = 0.0;
  for (double v : pi) {
    if (!(v >= 0.0)) throw InputError("pi must be nonnegative");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InputError("pi must sum to one");
  if (k < 0 || k >= K) throw InputError("label must lie in [0, K)");
  return pi[k] * alpha + (1.0 - pi[k]) * (1.0 - alpha) / (K - 1);
}

/// Draws from Beta(a, b) truncated to [lo, 1] by inverting the upper tail.
inline double truncated_beta_draw(Rng& rng, double a, double b, double lo) {
  const double upper_mass = boost::math::ibetac(a, b, lo);
  if (!(upper_mass > 0.0)) return lo;
  const double v = uniform01(rng) * upper_mass;
  if (!(v > 0.0)) return 1.0;
  return std::clamp(boost::math::ibetac_inv(a, b, v), lo, 1.0);
}

struct ConsensusResult {
  std::vector<int> global_labels;              // MAP visited state, compacted
  std::vector<std::vector<int>> local_labels;  // per source, MAP state
  std::vector<double> alpha_mean;              // posterior mean per source
  std::vector<double> alpha_min, alpha_max;    // range visited over the whole chain
  Matrix global_coclustering;
  std::vector<Matrix> local_coclustering;
  double map_log_density = -std::numeric_limits<double>::infinity();
  int K = 0;
};

inline nlohmann::json alpha_summary_json(const ConsensusResult& r) {
  nlohmann::json sources = nlohmann::json::array();
  for (std::size_t j = 0; j < r.alpha_mean.size(); ++j)
    sources.push_back({{"source", j + 1}, {"alpha_mean", r.alpha_mean[j]}, {"alpha_min", r.alpha_min[j]},
                       {"alpha_max", r.alpha_max[j]}});
  return {{"K", r.K}, {"alpha_lower_bound", r.K > 0 ? 1.0 / r.K : 0.0}, {"sources", sources},
          {"map_log_density", r.map_log_density}};
}

/// Number of clusters to share across sources: the largest count, over the
/// single-source clusterings, of clusters having at least min_size members
/// (never below 2).
inline int select_consensus_k(const std::vector<Clustering>& per_source, int min_size = 4) {
  int best = 2;
  for (const auto& c : per_source) {
    int big = 0;
    for (int s : c.cluster_sizes()) big += s >= min_size ? 1 : 0;
    best = std::max(best, big);
  }
  return best;
}

/// Zero-pads every embedding to the largest dimension.
inline std::vector<Matrix> pad_embeddings(const std::vector<Matrix>& Ys) {
  Eigen::Index dim = 0;
  for (const auto& Y : Ys) dim = std::max(dim, Y.cols());
  std::vector<Matrix> out;
  for (const auto& Y : Ys) {
    Matrix Z = Matrix::Zero(Y.rows(), dim);
    Z.leftCols(Y.cols()) = Y;
    out.push_back(std::move(Z));
  }
  return out;
}

namespace detail {

/// Relabels `labels` (values in [0, K)) to maximize overlap with `reference`,
/// greedily taking the largest remaining contingency cell.
inline void align_labels(std::vector<int>& labels, const std::vector<int>& reference, int K) {
  std::vector<std::vector<int>> table(static_cast<std::size_t>(K), std::vector<int>(static_cast<std::size_t>(K), 0));
  for (std::size_t i = 0; i < labels.size(); ++i) ++table[labels[i]][reference[i]];
  std::vector<int> map(static_cast<std::size_t>(K), -1);
  std::vector<bool> used(static_cast<std::size_t>(K), false);
  for (int step = 0; step < K; ++step) {
    int ba = -1, bb = -1, best = -1;
    for (int a = 0; a < K; ++a) {
      if (map[a] >= 0) continue;
      for (int b = 0; b < K; ++b)
        if (!used[b] && table[a][b] > best) {
          best = table[a][b];
          ba = a;
          bb = b;
        }
    }
    map[ba] = bb;
    used[bb] = true;
  }
  for (int& l : labels) l = map[l];
}

}  // namespace detail

/// Gibbs sampler. One sweep, in order:
///  1. local labels: for every variable the pair (global label, local labels)
///     is drawn jointly, the global label from its distribution with the local
///     labels summed out and each local label from likelihood x dependence;
///  2. component means from their conjugate Gaussian posteriors;
///  3. pi from its Dirichlet posterior given the global label counts;
///  4. alpha_j from Beta(matches + 1, mismatches + 1) truncated to [1/K, 1];
///  5. global labels from pi_k prod_j nu(local_jt, k, alpha_j).
inline ConsensusResult consensus_gibbs(const std::vector<Matrix>& embeddings, const ConsensusConfig& cfg) {
  const std::size_t J = embeddings.size();
  if (J < 1) throw InputError("consensus requires at least one source");
  cfg.validate(J);
  const Eigen::Index p = embeddings[0].rows();
  for (const auto& Y : embeddings) {
    if (Y.rows() != p) throw InputError("consensus sources cover different numbers of variables");
    if (!Y.allFinite()) throw InputError("consensus embedding contains non-finite values");
  }
  const int K = cfg.K;
  const std::vector<Matrix> Ys = pad_embeddings(embeddings);
  const Eigen::Index dim = Ys[0].cols();
  const double d = static_cast<double>(dim);

  ConsensusResult res;
  res.K = K;
  res.alpha_mean.assign(J, 0.0);
  res.alpha_min.assign(J, 1.0);
  res.alpha_max.assign(J, 0.0);
  res.global_coclustering = Matrix::Zero(p, p);
  res.local_coclustering.assign(J, Matrix::Zero(p, p));
  if (p <= 1) {
    res.global_labels.assign(static_cast<std::size_t>(p), 0);
    res.local_labels.assign(J, std::vector<int>(static_cast<std::size_t>(p), 0));
    res.global_coclustering.setOnes();
    for (auto& m : res.local_coclustering) m.setOnes();
    const double a0 = cfg.fixed_alpha.value_or(1.0);
    std::fill(res.alpha_mean.begin(), res.alpha_mean.end(), a0);
    std::fill(res.alpha_min.begin(), res.alpha_min.end(), a0);
    std::fill(res.alpha_max.begin(), res.alpha_max.end(), a0);
    return res;
  }

  Rng rng = make_stream(cfg.seed, "consensus");

  // Initial local labels from k-means per source, aligned to source 0.
  std::vector<std::vector<int>> L(J);
  for (std::size_t j = 0; j < J; ++j) {
    if (p >= K) {
      KMeansConfig kc;
      kc.k = K;
      kc.restarts = 5;
      kc.seed = derive_seed(cfg.seed, "consensus-init", {j});
      L[j] = kmeans(Ys[j], kc).labels;
    } else {
      L[j].resize(static_cast<std::size_t>(p));
      for (Eigen::Index t = 0; t < p; ++t) L[j][t] = static_cast<int>(t % K);
    }
    if (j > 0) detail::align_labels(L[j], L[0], K);
  }
  std::vector<int> G = L[0];

  std::vector<Matrix> theta(J, Matrix::Zero(K, dim));
  for (std::size_t j = 0; j < J; ++j) {
    std::vector<int> counts(static_cast<std::size_t>(K), 0);
    for (Eigen::Index t = 0; t < p; ++t) {
      theta[j].row(L[j][t]) += Ys[j].row(t);
      ++counts[L[j][t]];
    }
    for (int k = 0; k < K; ++k)
      if (counts[k] > 0) theta[j].row(k) /= counts[k];
  }
  std::vector<double> pi(static_cast<std::size_t>(K), 1.0 / K);
  std::vector<double> alpha(J, cfg.fixed_alpha.value_or(0.5 * (1.0 / K + 1.0)));

  auto log_nu = [&](int local, int global, double a) {
    return local == global ? std::log(a) : std::log1p(-a) - std::log(K - 1.0);
  };
  auto log_lik = [&](std::size_t j, Eigen::Index t, int k) {
    const double s = cfg.sigma_for(j);
    return -0.5 * d * std::log(2.0 * std::numbers::pi * s) - 0.5 * (Ys[j].row(t) - theta[j].row(k)).squaredNorm() / s;
  };
  auto log_joint = [&] {
    double lp = 0.0;
    for (Eigen::Index t = 0; t < p; ++t) {
      lp += std::log(pi[G[t]]);
      for (std::size_t j = 0; j < J; ++j) lp += log_nu(L[j][t], G[t], alpha[j]) + log_lik(j, t, L[j][t]);
    }
    for (std::size_t j = 0; j < J; ++j) {
      const double r = cfg.rho_for(j);
      for (int k = 0; k < K; ++k)
        lp += -0.5 * d * std::log(2.0 * std::numbers::pi * r) - 0.5 * theta[j].row(k).squaredNorm() / r;
    }
    double log_dir = std::lgamma(K * cfg.dirichlet_conc) - K * std::lgamma(cfg.dirichlet_conc);
    for (double v : pi) log_dir += (cfg.dirichlet_conc - 1.0) * std::log(v);
    return lp + log_dir;
  };

  std::vector<double> lw(static_cast<std::size_t>(K));
  std::vector<double> inner(static_cast<std::size_t>(K));
  std::vector<std::vector<double>> ll(J, std::vector<double>(static_cast<std::size_t>(K)));
  int kept = 0;
  for (int it = 0; it < cfg.n_iter; ++it) {
    // 1. (global, local) labels per variable.
    for (Eigen::Index t = 0; t < p; ++t) {
      for (std::size_t j = 0; j < J; ++j)
        for (int k = 0; k < K; ++k) ll[j][k] = log_lik(j, t, k);
      for (int g = 0; g < K; ++g) {
        lw[g] = std::log(pi[g]);
        for (std::size_t j = 0; j < J; ++j) {
          for (int k = 0; k < K; ++k) inner[k] = log_nu(k, g, alpha[j]) + ll[j][k];
          lw[g] += log_sum_exp(inner);
        }
      }
      G[t] = sample_log_weights(rng, lw);
      for (std::size_t j = 0; j < J; ++j) {
        for (int k = 0; k < K; ++k) inner[k] = log_nu(k, G[t], alpha[j]) + ll[j][k];
        L[j][t] = sample_log_weights(rng, inner);
      }
    }
    // 2. component means.
    for (std::size_t j = 0; j < J; ++j) {
      const double s = cfg.sigma_for(j), r = cfg.rho_for(j);
      Matrix sums = Matrix::Zero(K, dim);
      std::vector<int> counts(static_cast<std::size_t>(K), 0);
      for (Eigen::Index t = 0; t < p; ++t) {
        sums.row(L[j][t]) += Ys[j].row(t);
        ++counts[L[j][t]];
      }
      for (int k = 0; k < K; ++k) {
        const double var = 1.0 / (1.0 / r + counts[k] / s);
        for (Eigen::Index c = 0; c < dim; ++c)
          theta[j](k, c) = var * sums(k, c) / s + std::sqrt(var) * standard_normal(rng);
      }
    }
    // 3. pi.
    {
      std::vector<int> counts(static_cast<std::size_t>(K), 0);
      for (int g : G) ++counts[g];
      double total = 0.0;
      for (int k = 0; k < K; ++k) {
        pi[k] = std::gamma_distribution<double>(cfg.dirichlet_conc + counts[k], 1.0)(rng);
        total += pi[k];
      }
      for (double& v : pi) v = std::max(v / total, 1e-300);
    }
    // 4. adherence.
    for (std::size_t j = 0; j < J; ++j) {
      if (cfg.fixed_alpha) continue;
      int matches = 0;
      for (Eigen::Index t = 0; t < p; ++t) matches += L[j][t] == G[t] ? 1 : 0;
      alpha[j] = truncated_beta_draw(rng, matches + 1.0, static_cast<double>(p - matches) + 1.0, 1.0 / K);
    }
    // 5. global labels given the local ones.
    for (Eigen::Index t = 0; t < p; ++t) {
      for (int k = 0; k < K; ++k) {
        lw[k] = std::log(pi[k]);
        for (std::size_t j = 0; j < J; ++j) lw[k] += log_nu(L[j][t], k, alpha[j]);
      }
      G[t] = sample_log_weights(rng, lw);
    }

    for (std::size_t j = 0; j < J; ++j) {
      res.alpha_min[j] = std::min(res.alpha_min[j], alpha[j]);
      res.alpha_max[j] = std::max(res.alpha_max[j], alpha[j]);
    }
    if (it >= cfg.n_burnin) {
      ++kept;
      for (std::size_t j = 0; j < J; ++j) res.alpha_mean[j] += alpha[j];
      for (Eigen::Index a = 0; a < p; ++a)
        for (Eigen::Index b = 0; b < p; ++b) {
          if (G[a] == G[b]) res.global_coclustering(a, b) += 1.0;
          for (std::size_t j = 0; j < J; ++j)
            if (L[j][a] == L[j][b]) res.local_coclustering[j](a, b) += 1.0;
        }
    }
    const double lp = log_joint();
    if (lp > res.map_log_density) {
      res.map_log_density = lp;
      res.global_labels = G;
      res.local_labels = L;
    }
  }
  for (double& a : res.alpha_mean) a /= kept;
  res.global_coclustering /= kept;
  for (auto& m : res.local_coclustering) m /= kept;
  compact_labels(res.global_labels);
  for (auto& l : res.local_labels) compact_labels(l);
  return res;
}

/// Convenience overload for embeddings carrying variable names; all sources
/// must list the same variables in the same order.
inline ConsensusResult consensus_gibbs(const std::vector<Embedding>& embeddings, const ConsensusConfig& cfg) {
  std::vector<Matrix> Ys;
  for (const auto& e : embeddings) {
    if (!embeddings.empty() && e.names != embeddings.front().names)
      throw InputError("consensus sources have mismatched variable sets");
    Ys.push_back(e.Y);
  }
  return consensus_gibbs(Ys, cfg);
}

}  // namespace bngc
