#pragma once

#include "bngc/core.hpp"
#include "bngc/random.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <vector>

namespace bngc {

struct DPMeansConfig {
  double lambda = 0.5;
  int max_iter = 100;
  double tol = 0.0;
  bool refine = true;      // merge/split moves after convergence while they lower the objective
  std::uint64_t seed = 0;  // recorded for provenance; the algorithm is deterministic

  void validate() const {
    if (!(lambda > 0)) throw ConfigError("DP-means lambda must be positive");
    if (max_iter < 1) throw ConfigError("DP-means max_iter must be >= 1");
    if (tol < 0) throw ConfigError("DP-means tol must be nonnegative");
  }
};

struct DPMMConfig {
  double alpha0 = 1.0;
  double sigma = 0.01;  // component variance (covariance sigma I)
  double rho = 1.0;     // prior mean variance (G0 = N(0, rho I))
  int n_iter = 1000;
  int n_burnin = 200;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(alpha0 > 0 && sigma > 0 && rho > 0)) throw ConfigError("DPMM alpha0, sigma, rho must be positive");
    if (n_burnin < 0 || n_iter <= n_burnin) throw ConfigError("DPMM requires n_iter > n_burnin >= 0");
  }
};

/// Sum of squared distances to the assigned centers plus lambda per cluster.
inline double objective(const Matrix& Y, const std::vector<int>& labels, const Matrix& centers,
                        double lambda) {
  if (static_cast<Eigen::Index>(labels.size()) != Y.rows())
    throw InputError("objective: label count does not match number of points");
  if (centers.rows() > 0 && centers.cols() != Y.cols())
    throw InputError("objective: center dimension does not match points");
  double total = 0.0;
  for (Eigen::Index i = 0; i < Y.rows(); ++i) {
    const int c = labels[static_cast<std::size_t>(i)];
    if (c < 0 || c >= centers.rows()) throw InputError("objective: label out of range");
    total += (Y.row(i) - centers.row(c)).squaredNorm();
  }
  return total + lambda * static_cast<double>(centers.rows());
}

inline Matrix cluster_means(const Matrix& Y, const std::vector<int>& labels, int k) {
  Matrix centers = Matrix::Zero(k, Y.cols());
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < Y.rows(); ++i) {
    centers.row(labels[i]) += Y.row(i);
    ++counts[labels[i]];
  }
  for (int c = 0; c < k; ++c)
    if (counts[c] > 0) centers.row(c) /= counts[c];
  return centers;
}

inline Clustering lloyd(const Matrix& Y, Matrix centers, int max_iter = 300);

namespace detail {

/// Drops empty clusters, keeping the relative order of the survivors.
inline int drop_empty(std::vector<int>& labels, int k) {
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++counts[l];
  std::vector<int> remap(static_cast<std::size_t>(k), -1);
  int next = 0;
  for (int c = 0; c < k; ++c)
    if (counts[c] > 0) remap[c] = next++;
  for (int& l : labels) l = remap[l];
  return next;
}

inline int nearest_center(const Eigen::RowVectorXd& y, const std::vector<Eigen::RowVectorXd>& centers,
                          double& best_dist) {
  int best = -1;
  best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double d = (y - centers[c]).squaredNorm();
    if (d < best_dist) {  // strict: ties stay with the lowest index
      best_dist = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

/// Merges the pair of clusters whose union lowers the objective the most.
/// Joining clusters a and b adds n_a n_b / (n_a + n_b) ||mu_a - mu_b||^2 to the
/// squared error and saves lambda. Returns false when no merge helps.
inline bool merge_best_pair(std::vector<int>& labels, const Matrix& means, int& k, double lambda) {
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++counts[l];
  double best_gain = 0.0;
  int ba = -1, bb = -1;
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b) {
      const double na = counts[a], nb = counts[b];
      const double gain = lambda - na * nb / (na + nb) * (means.row(a) - means.row(b)).squaredNorm();
      if (gain > best_gain) {
        best_gain = gain;
        ba = a;
        bb = b;
      }
    }
  if (ba < 0) return false;
  for (int& l : labels)
    if (l == bb) l = ba;
  k = drop_empty(labels, k);
  return true;
}

// Two-means split of cluster c seeded at the member farthest from its mean
// and the member farthest from that one. Fills the members that would move
// and the squared error before and after; false when one side ends empty.
inline bool two_means_split(const Matrix& Y, const std::vector<int>& labels, const Matrix& means, int c,
                            std::vector<Eigen::Index>& moved, double& before, double& after) {
  std::vector<Eigen::Index> members;
  for (Eigen::Index i = 0; i < Y.rows(); ++i)
    if (labels[i] == c) members.push_back(i);
  if (members.size() < 2) return false;
  before = 0.0;
  for (auto i : members) before += (Y.row(i) - means.row(c)).squaredNorm();
  auto farthest = [&](const Eigen::RowVectorXd& from) {
    Eigen::Index arg = members[0];
    double far = -1.0;
    for (auto i : members) {
      const double d = (Y.row(i) - from).squaredNorm();
      if (d > far) {
        far = d;
        arg = i;
      }
    }
    return arg;
  };
  const Eigen::Index a = farthest(means.row(c));
  const Eigen::Index b = farthest(Y.row(a));
  Matrix sub(static_cast<Eigen::Index>(members.size()), Y.cols());
  for (std::size_t m = 0; m < members.size(); ++m) sub.row(static_cast<Eigen::Index>(m)) = Y.row(members[m]);
  Matrix seeds(2, Y.cols());
  seeds.row(0) = Y.row(a);
  seeds.row(1) = Y.row(b);
  const Clustering two = lloyd(sub, seeds);
  if (two.cluster_sizes()[0] == 0 || two.cluster_sizes()[1] == 0) return false;
  after = two.objective;
  moved.clear();
  for (std::size_t m = 0; m < members.size(); ++m)
    if (two.labels[m] == 1) moved.push_back(members[m]);
  return true;
}

inline bool split_cluster(const Matrix& Y, std::vector<int>& labels, const Matrix& means, int& k, int c) {
  std::vector<Eigen::Index> moved;
  double before = 0, after = 0;
  if (!two_means_split(Y, labels, means, c, moved, before, after)) return false;
  for (auto i : moved) labels[i] = k;
  ++k;
  return true;
}

/// Splits the cluster whose two-means split lowers the objective the most.
/// Returns false when no split helps.
inline bool split_best_cluster(const Matrix& Y, std::vector<int>& labels, const Matrix& means, int& k,
                               double lambda) {
  double best_gain = 0.0;
  std::vector<Eigen::Index> best_moved, moved;
  for (int c = 0; c < k; ++c) {
    double before = 0, after = 0;
    if (!two_means_split(Y, labels, means, c, moved, before, after)) continue;
    const double gain = before - after - lambda;
    if (gain > best_gain) {
      best_gain = gain;
      best_moved = moved;
    }
  }
  if (best_moved.empty()) return false;
  for (auto i : best_moved) labels[i] = k;
  ++k;
  return true;
}

}  // namespace detail

/// Per-sweep trace, mainly for monotonicity checks.
struct DPMeansTrace {
  std::vector<double> objectives;  // objective after each sweep (centers = means)
  int sweeps = 0;
};

namespace detail {

// Plain sweeps until no label changes (or the objective stalls within tol).
// Returns the objective of the final state.
inline double dp_sweeps(const Matrix& Y, std::vector<int>& labels, Matrix& means, int& k, const DPMeansConfig& cfg,
                        double prev, DPMeansTrace* trace) {
  const Eigen::Index p = Y.rows();
  for (int sweep = 0; sweep < cfg.max_iter; ++sweep) {
    std::vector<Eigen::RowVectorXd> centers;
    for (int c = 0; c < k; ++c) centers.push_back(means.row(c));
    bool changed = false;
    for (Eigen::Index i = 0; i < p; ++i) {
      double dist = 0;
      int c = nearest_center(Y.row(i), centers, dist);
      if (dist > cfg.lambda) {
        centers.push_back(Y.row(i));
        c = static_cast<int>(centers.size()) - 1;
      }
      if (c != labels[i]) changed = true;
      labels[i] = c;
    }
    k = drop_empty(labels, static_cast<int>(centers.size()));
    means = cluster_means(Y, labels, k);
    const double obj = objective(Y, labels, means, cfg.lambda);
    if (trace) {
      trace->objectives.push_back(obj);
      ++trace->sweeps;
    }
    const bool converged = !changed || (cfg.tol > 0 && prev - obj <= cfg.tol * std::max(1.0, std::abs(prev)));
    prev = obj;
    if (converged) break;
  }
  return prev;
}

// Tries merging each cluster with its closest partner and splitting each
// cluster in two, re-running the sweeps after each, and keeps the best
// outcome if it beats the current objective.
inline bool reoptimized_move(const Matrix& Y, std::vector<int>& labels, Matrix& means, int& k,
                             const DPMeansConfig& cfg, double current) {
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++counts[l];
  std::vector<std::vector<int>> starts;
  std::set<std::pair<int, int>> pairs;
  for (int a = 0; a < k; ++a) {
    int partner = -1;
    double cost = std::numeric_limits<double>::infinity();
    for (int b = 0; b < k; ++b) {
      if (b == a) continue;
      const double na = counts[a], nb = counts[b];
      const double c = na * nb / (na + nb) * (means.row(a) - means.row(b)).squaredNorm();
      if (c < cost) {
        cost = c;
        partner = b;
      }
    }
    if (partner >= 0) pairs.insert({std::min(a, partner), std::max(a, partner)});
  }
  for (const auto& [a, b] : pairs) {
    auto l = labels;
    for (int& v : l)
      if (v == b) v = a;
    starts.push_back(std::move(l));
  }
  for (int c = 0; c < k; ++c) {
    if (counts[c] < 2) continue;
    auto l = labels;
    int kk = k;
    if (split_cluster(Y, l, means, kk, c)) starts.push_back(std::move(l));
  }

  double best = current - 1e-12 * std::max(1.0, std::abs(current));
  bool found = false;
  const int k0 = k;
  for (auto& l : starts) {
    int kk = drop_empty(l, k0 + 1);
    Matrix m = cluster_means(Y, l, kk);
    const double obj = dp_sweeps(Y, l, m, kk, cfg, objective(Y, l, m, cfg.lambda), nullptr);
    if (obj < best) {
      best = obj;
      labels = l;
      means = m;
      k = kk;
      found = true;
    }
  }
  return found;
}

}  // namespace detail

/// DP-means hard clustering of the rows of Y. Starts from one cluster at the
/// global mean and sweeps the rows in input order: a row whose squared
/// distance to every center exceeds lambda opens a new cluster at itself,
/// otherwise it joins the nearest center. Centers become cluster means after
/// every sweep. With cfg.refine, a converged state is followed by the best
/// objective-lowering pair merge or cluster split, and when neither helps
/// directly, by the best merge or split whose re-converged sweeps end lower.
inline Clustering dp_means(const Matrix& Y, const DPMeansConfig& cfg, DPMeansTrace* trace = nullptr) {
  cfg.validate();
  if (!Y.allFinite()) throw InputError("DP-means input contains non-finite values");
  const Eigen::Index p = Y.rows();
  Clustering out;
  out.method = "dp-means";
  if (p == 0) return out;

  std::vector<int> labels(static_cast<std::size_t>(p), 0);
  int k = 1;
  Matrix means = Y.colwise().mean();
  double obj = objective(Y, labels, means, cfg.lambda);
  if (trace) trace->objectives.push_back(obj);
  obj = detail::dp_sweeps(Y, labels, means, k, cfg, obj, trace);

  for (int round = 0; cfg.refine && round < cfg.max_iter; ++round) {
    if (detail::merge_best_pair(labels, means, k, cfg.lambda) ||
        detail::split_best_cluster(Y, labels, means, k, cfg.lambda)) {
      means = cluster_means(Y, labels, k);
      obj = objective(Y, labels, means, cfg.lambda);
      if (trace) trace->objectives.push_back(obj);
      obj = detail::dp_sweeps(Y, labels, means, k, cfg, obj, trace);
    } else if (detail::reoptimized_move(Y, labels, means, k, cfg, obj)) {
      obj = objective(Y, labels, means, cfg.lambda);
      if (trace) trace->objectives.push_back(obj);
    } else {
      break;
    }
  }
  out.labels = labels;
  out.k = k;
  out.centers = means;
  out.objective = objective(Y, labels, means, cfg.lambda);
  return out;
}

/// Lloyd iterations from the given initial centers; no clusters are created.
/// Empty clusters keep their previous center.
inline Clustering lloyd(const Matrix& Y, Matrix centers, int max_iter) {
  const Eigen::Index p = Y.rows();
  const int k = static_cast<int>(centers.rows());
  std::vector<int> labels(static_cast<std::size_t>(p), -1);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < p; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (Y.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (labels[i] != best) changed = true;
      labels[i] = best;
    }
    if (!changed) break;
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    Matrix sums = Matrix::Zero(k, Y.cols());
    for (Eigen::Index i = 0; i < p; ++i) {
      sums.row(labels[i]) += Y.row(i);
      ++counts[labels[i]];
    }
    for (int c = 0; c < k; ++c)
      if (counts[c] > 0) centers.row(c) = sums.row(c) / counts[c];
  }
  Clustering out;
  out.labels = labels;
  out.k = k;
  out.centers = centers;
  out.objective = objective(Y, labels, centers, 0.0);
  out.method = "lloyd";
  return out;
}

struct KMeansConfig {
  int k = 2;
  int restarts = 20;
  int max_iter = 300;
  std::uint64_t seed = 0;
};

/// k-means with k-means++ seeding; best of `restarts` by within-cluster SSE.
inline Clustering kmeans(const Matrix& Y, const KMeansConfig& cfg) {
  const Eigen::Index p = Y.rows();
  if (cfg.k < 1 || cfg.k > p) throw InputError("k-means requires 1 <= k <= number of points");
  Rng rng = make_stream(cfg.seed, "kmeans");
  Clustering best;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, cfg.restarts); ++r) {
    Matrix centers(cfg.k, Y.cols());
    centers.row(0) = Y.row(uniform_int(rng, 0, static_cast<int>(p) - 1));
    Vector d2(p);
    for (Eigen::Index i = 0; i < p; ++i) d2(i) = (Y.row(i) - centers.row(0)).squaredNorm();
    for (int c = 1; c < cfg.k; ++c) {
      const double total = d2.sum();
      Eigen::Index pick = 0;
      if (total > 0) {
        double u = uniform01(rng) * total;
        for (pick = 0; pick < p - 1; ++pick) {
          u -= d2(pick);
          if (u < 0) break;
        }
      } else {
        pick = uniform_int(rng, 0, static_cast<int>(p) - 1);
      }
      centers.row(c) = Y.row(pick);
      for (Eigen::Index i = 0; i < p; ++i) d2(i) = std::min(d2(i), (Y.row(i) - centers.row(c)).squaredNorm());
    }
    Clustering run = lloyd(Y, centers, cfg.max_iter);
    if (run.objective < best_sse) {
      best_sse = run.objective;
      best = std::move(run);
    }
  }
  best.k = detail::drop_empty(best.labels, best.k);
  best.centers = cluster_means(Y, best.labels, best.k);
  best.method = "k-means";
  return best;
}

/// Output of the DPMM sampler: the highest-density visited labeling and the
/// posterior co-clustering frequencies over post-burn-in sweeps.
struct DPMMResult {
  Clustering map;
  double map_log_density = -std::numeric_limits<double>::infinity();
  Matrix coclustering;
  std::vector<int> k_trace;  // cluster count after every sweep
};

/// log p(labels, Y) with component means integrated out: Chinese-restaurant
/// prior times conjugate Gaussian marginals per cluster.
inline double dpmm_log_joint(const Matrix& Y, const std::vector<int>& labels, double alpha0, double sigma,
                             double rho) {
  std::vector<int> lab(labels);
  const int k = compact_labels(lab);
  const Eigen::Index p = Y.rows();
  const double d = static_cast<double>(Y.cols());
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  Matrix sums = Matrix::Zero(k, Y.cols());
  std::vector<double> sq(static_cast<std::size_t>(k), 0.0);
  for (Eigen::Index i = 0; i < p; ++i) {
    ++counts[lab[i]];
    sums.row(lab[i]) += Y.row(i);
    sq[lab[i]] += Y.row(i).squaredNorm();
  }
  double lp = k * std::log(alpha0) + std::lgamma(alpha0) - std::lgamma(alpha0 + static_cast<double>(p));
  for (int c = 0; c < k; ++c) {
    const double n = counts[c];
    lp += std::lgamma(n);
    // Integral over mu of prod_i N(y_i | mu, sigma I) N(mu | 0, rho I), per dimension.
    const double prec = 1.0 / rho + n / sigma;
    lp += -0.5 * n * d * std::log(2.0 * std::numbers::pi * sigma) - 0.5 * d * std::log(rho * prec) -
          0.5 * sq[c] / sigma + 0.5 * sums.row(c).squaredNorm() / (sigma * sigma * prec);
  }
  return lp;
}

/// DPMM Gibbs sampler with explicit component means: each point is removed,
/// its emptied cluster dropped, and it is reassigned to an existing cluster
/// with weight n_{c,-l} N(y | mu_c, sigma I) or to a new cluster with weight
/// alpha0 * N(y | 0, (sigma + rho) I); a new cluster draws its mean from the
/// one-point posterior. Means are then refreshed from their conjugate
/// posteriors.
inline DPMMResult dpmm_gibbs(const Matrix& Y, const DPMMConfig& cfg) {
  cfg.validate();
  if (!Y.allFinite()) throw InputError("DPMM input contains non-finite values");
  const Eigen::Index p = Y.rows();
  const Eigen::Index dim = Y.cols();
  const double d = static_cast<double>(dim);
  DPMMResult res;
  res.coclustering = Matrix::Zero(p, p);
  res.map.method = "dpmm";
  if (p == 0) return res;

  Rng rng = make_stream(cfg.seed, "dpmm");
  std::vector<int> z(static_cast<std::size_t>(p), 0);
  std::vector<Eigen::RowVectorXd> mu{Y.colwise().mean()};
  std::vector<int> counts{static_cast<int>(p)};

  const double log_norm_sigma = -0.5 * d * std::log(2.0 * std::numbers::pi * cfg.sigma);
  const double log_norm_marg = -0.5 * d * std::log(2.0 * std::numbers::pi * (cfg.sigma + cfg.rho));
  const double post_var_one = 1.0 / (1.0 / cfg.rho + 1.0 / cfg.sigma);

  int kept = 0;
  for (int it = 0; it < cfg.n_iter; ++it) {
    for (Eigen::Index l = 0; l < p; ++l) {
      const int old = z[l];
      if (--counts[old] == 0) {
        counts.erase(counts.begin() + old);
        mu.erase(mu.begin() + old);
        for (int& zi : z)
          if (zi > old) --zi;
      }
      const int C = static_cast<int>(counts.size());
      std::vector<double> logw(static_cast<std::size_t>(C) + 1);
      for (int c = 0; c < C; ++c)
        logw[c] = std::log(static_cast<double>(counts[c])) + log_norm_sigma -
                  0.5 * (Y.row(l) - mu[c]).squaredNorm() / cfg.sigma;
      logw[C] = std::log(cfg.alpha0) + log_norm_marg - 0.5 * Y.row(l).squaredNorm() / (cfg.sigma + cfg.rho);
      const int pick = sample_log_weights(rng, logw);
      if (pick == C) {
        Eigen::RowVectorXd m = post_var_one / cfg.sigma * Y.row(l);
        for (Eigen::Index j = 0; j < dim; ++j) m(j) += std::sqrt(post_var_one) * standard_normal(rng);
        mu.push_back(m);
        counts.push_back(1);
      } else {
        ++counts[pick];
      }
      z[l] = pick;
    }
    // Conjugate mean refresh.
    const int C = static_cast<int>(counts.size());
    Matrix sums = Matrix::Zero(C, dim);
    for (Eigen::Index l = 0; l < p; ++l) sums.row(z[l]) += Y.row(l);
    for (int c = 0; c < C; ++c) {
      const double var = 1.0 / (1.0 / cfg.rho + counts[c] / cfg.sigma);
      Eigen::RowVectorXd m = var / cfg.sigma * sums.row(c);
      for (Eigen::Index j = 0; j < dim; ++j) m(j) += std::sqrt(var) * standard_normal(rng);
      mu[c] = m;
    }
    res.k_trace.push_back(C);

    if (it >= cfg.n_burnin) {
      ++kept;
      for (Eigen::Index a = 0; a < p; ++a)
        for (Eigen::Index b = 0; b < p; ++b)
          if (z[a] == z[b]) res.coclustering(a, b) += 1.0;
    }
    const double lp = dpmm_log_joint(Y, z, cfg.alpha0, cfg.sigma, cfg.rho);
    if (lp > res.map_log_density) {
      res.map_log_density = lp;
      res.map.labels = z;
    }
  }
  res.coclustering /= std::max(1, kept);
  res.map.k = compact_labels(res.map.labels);
  res.map.centers = cluster_means(Y, res.map.labels, res.map.k);
  return res;
}

}  // namespace bngc
