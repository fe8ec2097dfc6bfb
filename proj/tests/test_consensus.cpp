#include "support.hpp"
#include "consensus_oracle.hpp"

using namespace bngc;
using testing_support::two_blobs;

TEST(Dependence, Examples) {
  EXPECT_DOUBLE_EQ(dependence_function(1, 1, 0.9, 10), 0.9);
  EXPECT_DOUBLE_EQ(dependence_function(0, 3, 0.9, 10), 0.1 / 9);
  for (int l = 0; l < 4; ++l) EXPECT_DOUBLE_EQ(dependence_function(l, 2, 0.25, 4), 0.25);
  double total = 0;
  for (int l = 0; l < 5; ++l) total += dependence_function(l, 3, 0.6, 5);
  EXPECT_NEAR(total, 1.0, 1e-15);
  EXPECT_THROW(dependence_function(0, 0, 0.1, 5), InputError);
  EXPECT_THROW(dependence_function(0, 0, 1.1, 5), InputError);
  EXPECT_THROW(dependence_function(5, 0, 0.5, 5), InputError);
}

TEST(LocalProbability, Examples) {
  const std::vector<double> pi{0.5, 0.3, 0.2};
  for (int k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(local_cluster_probability(k, pi, 1.0, 3), pi[k]);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(local_cluster_probability(k, pi, 1.0 / 3, 3), 1.0 / 3, 1e-15);
  EXPECT_NEAR(local_cluster_probability(0, pi, 0.8, 3), 0.5 * 0.8 + 0.5 * 0.1, 1e-15);
  EXPECT_NEAR(local_cluster_probability(0, pi, 0.8, 3), 0.45, 1e-15);
  EXPECT_THROW(local_cluster_probability(0, {0.5, 0.6, 0.2}, 0.8, 3), InputError);
  EXPECT_THROW(local_cluster_probability(0, {0.5, 0.5}, 0.8, 3), InputError);
}

TEST(LocalProbability, MarginalizesOverGlobalLabel) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> kd(2, 12);
  std::gamma_distribution<double> g(1.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    const int K = kd(rng);
    std::vector<double> pi(static_cast<std::size_t>(K));
    double s = 0;
    for (double& v : pi) s += (v = g(rng));
    for (double& v : pi) v /= s;
    const double alpha = 1.0 / K + (1.0 - 1.0 / K) * u(rng);
    double total = 0;
    for (int k = 0; k < K; ++k) {
      const double v = local_cluster_probability(k, pi, alpha, K);
      // Sum over the global label of pi_g nu(k, g, alpha).
      double direct = 0;
      for (int gl = 0; gl < K; ++gl) direct += pi[gl] * dependence_function(k, gl, alpha, K);
      EXPECT_NEAR(v, direct, 1e-12);
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(TruncatedBeta, StaysInBounds) {
  Rng rng = make_stream(2, "t");
  for (int i = 0; i < 2000; ++i) {
    const double v = truncated_beta_draw(rng, 1.0 + i % 7, 1.0 + i % 13, 0.25);
    EXPECT_GE(v, 0.25);
    EXPECT_LE(v, 1.0);
  }
  // Heavy mass below the floor still yields a draw at or above it.
  EXPECT_GE(truncated_beta_draw(rng, 1.0, 500.0, 0.5), 0.5);
}

TEST(Consensus, IdenticalSourcesWithTwoBlobs) {
  std::mt19937_64 rng(3);
  const Matrix Y = two_blobs(15, 0.05, rng);
  std::vector<int> truth(30);
  for (int i = 0; i < 30; ++i) truth[i] = i < 15 ? 0 : 1;
  ASSERT_TRUE(same_partition(dp_means(Y, {}).labels, truth));
  ConsensusConfig cfg;
  cfg.K = 2;
  cfg.n_iter = 400;
  cfg.n_burnin = 100;
  cfg.seed = 5;
  const auto r = consensus_gibbs(std::vector<Matrix>{Y, Y}, cfg);
  EXPECT_TRUE(same_partition(r.global_labels, truth));
  for (double a : r.alpha_mean) EXPECT_GE(a, 0.9);
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_GE(r.alpha_min[j], 0.5);
    EXPECT_LE(r.alpha_max[j], 1.0);
    EXPECT_TRUE(same_partition(r.local_labels[j], truth));
  }
  EXPECT_EQ(alpha_summary_json(r)["sources"].size(), 2u);
}

TEST(Consensus, DisagreeingSourcesMatchExactAdherencePosterior) {
  std::mt19937_64 rng(4);
  const Matrix Y1 = two_blobs(15, 0.05, rng);
  std::vector<int> perm(30);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix Y2(30, 2);
  for (int i = 0; i < 30; ++i) Y2.row(i) = Y1.row(perm[i]);
  std::vector<int> b1(30), b2(30);
  for (int i = 0; i < 30; ++i) {
    b1[i] = i < 15 ? 0 : 1;
    b2[i] = perm[i] < 15 ? 0 : 1;
  }
  int agree = 0;
  for (int i = 0; i < 30; ++i) agree += b1[i] == b2[i];
  const double match = std::max(agree, 30 - agree) / 30.0;
  const auto exact = testing_support::two_source_alpha_oracle(b1, b2);
  ConsensusConfig cfg;
  cfg.K = 2;
  cfg.n_iter = 2000;
  cfg.n_burnin = 200;
  cfg.seed = 6;
  const auto r = consensus_gibbs(std::vector<Matrix>{Y1, Y2}, cfg);
  EXPECT_NEAR(r.alpha_mean[0], exact.alpha1, 0.05);
  EXPECT_NEAR(r.alpha_mean[1], exact.alpha2, 0.05);
  const double lo = *std::min_element(r.alpha_mean.begin(), r.alpha_mean.end());
  EXPECT_LE(lo, match + 0.15);
  EXPECT_LT(lo, 0.8);
  for (std::size_t j = 0; j < 2; ++j) EXPECT_GE(r.alpha_min[j], 0.5);
}

TEST(Consensus, SingleVariable) {
  ConsensusConfig cfg;
  const auto r = consensus_gibbs(std::vector<Matrix>{Matrix::Ones(1, 2), Matrix::Ones(1, 3)}, cfg);
  EXPECT_EQ(r.global_labels, std::vector<int>{0});
  EXPECT_EQ(r.global_coclustering(0, 0), 1.0);
}

TEST(Consensus, FixedAdherenceSingleSourceMatchesDpmm) {
  std::mt19937_64 rng(5);
  const Matrix Y = two_blobs(8, 0.08, rng);
  ConsensusConfig cfg;
  cfg.K = 2;
  cfg.fixed_alpha = 1.0;
  cfg.n_iter = 1500;
  cfg.n_burnin = 300;
  cfg.seed = 7;
  const auto c = consensus_gibbs(std::vector<Matrix>{Y}, cfg);
  DPMMConfig dc;
  dc.sigma = 0.01;
  dc.rho = 1.0;
  dc.n_iter = 1500;
  dc.n_burnin = 300;
  dc.seed = 7;
  const auto d = dpmm_gibbs(Y, dc);
  EXPECT_LE((c.local_coclustering[0] - d.coclustering).cwiseAbs().maxCoeff(), 0.1);
  EXPECT_EQ(c.alpha_mean[0], 1.0);
}

TEST(Consensus, RejectsMismatchedSources) {
  Embedding a, b;
  a.Y = b.Y = Matrix::Zero(3, 2);
  a.names = {"x", "y", "z"};
  b.names = {"x", "y", "w"};
  EXPECT_THROW(consensus_gibbs(std::vector<Embedding>{a, b}, ConsensusConfig{}), InputError);
  EXPECT_THROW(consensus_gibbs(std::vector<Matrix>{Matrix::Zero(3, 2), Matrix::Zero(4, 2)}, ConsensusConfig{}),
               InputError);
  ConsensusConfig bad;
  bad.K = 1;
  EXPECT_THROW(consensus_gibbs(std::vector<Matrix>{Matrix::Zero(3, 2)}, bad), ConfigError);
}

TEST(Consensus, DeterministicAndKSelection) {
  std::mt19937_64 rng(6);
  const Matrix Y = two_blobs(6, 0.1, rng);
  ConsensusConfig cfg;
  cfg.n_iter = 100;
  cfg.n_burnin = 10;
  cfg.seed = 3;
  const auto a = consensus_gibbs(std::vector<Matrix>{Y, Y}, cfg);
  const auto b = consensus_gibbs(std::vector<Matrix>{Y, Y}, cfg);
  EXPECT_EQ(a.global_labels, b.global_labels);
  EXPECT_EQ(a.alpha_mean, b.alpha_mean);
  EXPECT_EQ(select_consensus_k({make_clustering({0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2}), make_clustering({0, 1})}), 3);
  EXPECT_EQ(select_consensus_k({make_clustering({0, 1, 2})}), 2);
  const auto padded = pad_embeddings({Matrix::Ones(2, 1), Matrix::Ones(2, 3)});
  EXPECT_EQ(padded[0].cols(), 3);
  EXPECT_EQ(padded[0](0, 2), 0.0);
}
