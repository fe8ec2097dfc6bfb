#include "support.hpp"

using namespace bngc;
using testing_support::all_partitions;
using testing_support::two_blobs;

namespace {

/// Objective recomputed from scratch: SSE around each cluster mean + lambda k.
double brute_objective(const Matrix& Y, const std::vector<int>& rgs, double lambda) {
  const int k = testing_support::block_count(rgs);
  double total = lambda * k;
  for (int c = 0; c < k; ++c) {
    Eigen::RowVectorXd m = Eigen::RowVectorXd::Zero(Y.cols());
    int n = 0;
    for (std::size_t i = 0; i < rgs.size(); ++i)
      if (rgs[i] == c) {
        m += Y.row(static_cast<Eigen::Index>(i));
        ++n;
      }
    m /= n;
    for (std::size_t i = 0; i < rgs.size(); ++i)
      if (rgs[i] == c) total += (Y.row(static_cast<Eigen::Index>(i)) - m).squaredNorm();
  }
  return total;
}

double brute_optimum(const Matrix& Y, double lambda) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& rgs : all_partitions(static_cast<int>(Y.rows()))) best = std::min(best, brute_objective(Y, rgs, lambda));
  return best;
}

}  // namespace

TEST(DPMeans, HugeLambdaGivesOneClusterAtTheMean) {
  std::mt19937_64 rng(1);
  const Matrix Y = two_blobs(10, 0.1, rng);
  DPMeansConfig cfg;
  cfg.lambda = 100.0;
  const auto c = dp_means(Y, cfg);
  EXPECT_EQ(c.k, 1);
  EXPECT_TRUE(c.centers.row(0).isApprox(Y.colwise().mean(), 1e-12));
  // Same as Lloyd from the global mean with one center.
  const auto l = lloyd(Y, Y.colwise().mean());
  EXPECT_TRUE(same_partition(c.labels, l.labels));
}

TEST(DPMeans, TinyLambdaSeparatesDistinctPoints) {
  std::mt19937_64 rng(2);
  const Matrix Y = two_blobs(6, 0.3, rng);
  DPMeansConfig cfg;
  cfg.lambda = 1e-9;
  const auto c = dp_means(Y, cfg);
  EXPECT_EQ(c.k, 12);
  EXPECT_NEAR(c.objective, cfg.lambda * 12, 1e-15);
}

TEST(DPMeans, TwoBlobsOfFourMatchBruteForceOptimum) {
  std::mt19937_64 rng(3);
  const Matrix Y = two_blobs(4, 0.05, rng);
  const auto c = dp_means(Y, {});
  EXPECT_EQ(c.k, 2);
  EXPECT_NEAR(c.objective, brute_optimum(Y, 0.5), 1e-12);
}

TEST(DPMeans, ObjectiveMatchesDefinition) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 20; ++t) {
    Matrix Y(7, 3);
    for (Eigen::Index i = 0; i < Y.size(); ++i) Y.data()[i] = n01(rng);
    const auto c = dp_means(Y, {});
    EXPECT_NEAR(c.objective, brute_objective(Y, c.labels, 0.5), 1e-8);
    EXPECT_NEAR(objective(Y, c.labels, c.centers, 0.5), c.objective, 1e-12);
  }
}

TEST(DPMeans, ObjectiveExamples) {
  const Matrix same = Matrix::Constant(5, 2, 0.7);
  EXPECT_DOUBLE_EQ(objective(same, {0, 0, 0, 0, 0}, same.colwise().mean(), 0.5), 0.5);
  Matrix pts(3, 2);
  pts << 0, 0, 1, 0, 0, 1;
  EXPECT_DOUBLE_EQ(objective(pts, {0, 1, 2}, pts, 0.5), 1.5);
  EXPECT_THROW(objective(pts, {0, 1}, pts, 0.5), InputError);
  EXPECT_THROW(objective(pts, {0, 1, 2}, Matrix::Zero(3, 3), 0.5), InputError);
}

TEST(DPMeans, ObjectiveNeverIncreasesAcrossSweeps) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  std::uniform_int_distribution<int> size(2, 40), dim(1, 5);
  std::uniform_real_distribution<double> lam(0.05, 3.0);
  for (int run = 0; run < 1000; ++run) {
    Matrix Y(size(rng), dim(rng));
    for (Eigen::Index i = 0; i < Y.size(); ++i) Y.data()[i] = n01(rng);
    DPMeansConfig cfg;
    cfg.lambda = lam(rng);
    DPMeansTrace trace;
    const auto c = dp_means(Y, cfg, &trace);
    for (std::size_t s = 1; s < trace.objectives.size(); ++s)
      ASSERT_LE(trace.objectives[s], trace.objectives[s - 1] + 1e-10) << "run " << run << " sweep " << s;
    ASSERT_EQ(static_cast<int>(c.cluster_sizes().size()), c.k);
    for (int sz : c.cluster_sizes()) ASSERT_GT(sz, 0);
  }
}

TEST(DPMeans, NearBruteForceOptimumOnSmallInstances) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n01;
  std::uniform_int_distribution<int> size(3, 8);
  double worst = 1.0;
  for (int inst = 0; inst < 50; ++inst) {
    const int p = size(rng);
    Matrix Y(p, 2);
    for (Eigen::Index i = 0; i < Y.size(); ++i) Y.data()[i] = 0.6 * n01(rng);
    const auto c = dp_means(Y, {});
    const double ratio = c.objective / brute_optimum(Y, 0.5);
    EXPECT_GE(ratio, 1.0 - 1e-12);
    worst = std::max(worst, ratio);
  }
  EXPECT_LE(worst, 1.2);
  RecordProperty("worst_ratio", std::to_string(worst));
}

TEST(DPMeans, RefinementSplitsAClusterThePlainSweepsKeep) {
  Matrix Y(6, 1);
  Y << -0.6, -0.6, -0.6, 0.6, 0.6, 0.6;
  DPMeansConfig plain;
  plain.refine = false;
  const auto a = dp_means(Y, plain);
  EXPECT_EQ(a.k, 1);
  EXPECT_NEAR(a.objective, 6 * 0.36 + 0.5, 1e-12);
  const auto b = dp_means(Y, {});
  EXPECT_EQ(b.k, 2);
  EXPECT_NEAR(b.objective, 1.0, 1e-12);
  EXPECT_NEAR(b.objective, brute_optimum(Y, 0.5), 1e-12);
}

TEST(DPMeans, RefinementNeverWorsensThePlainResult) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n01;
  DPMeansConfig plain;
  plain.refine = false;
  for (int t = 0; t < 100; ++t) {
    Matrix Y(12, 2);
    for (Eigen::Index i = 0; i < Y.size(); ++i) Y.data()[i] = 0.6 * n01(rng);
    EXPECT_LE(dp_means(Y, {}).objective, dp_means(Y, plain).objective + 1e-12);
  }
}

TEST(DPMeans, ConvergedLabelsAreALloydFixedPoint) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 30; ++t) {
    Matrix Y(15, 2);
    for (Eigen::Index i = 0; i < Y.size(); ++i) Y.data()[i] = n01(rng);
    const auto c = dp_means(Y, {});
    const auto l = lloyd(Y, c.centers, 1);
    EXPECT_TRUE(same_partition(c.labels, l.labels));
  }
}

TEST(DPMeans, TiesGoToTheLowestIndex) {
  Matrix Y(3, 1);
  Y << -1, 1, 0;
  DPMeansConfig cfg;
  cfg.lambda = 1.5;  // 0 is at squared distance 1 from both centers
  const auto c = dp_means(Y, cfg);
  EXPECT_EQ(c.labels[2], c.labels[0]);
}

TEST(DPMeans, PermutationOfInputsGivesTheSamePartition) {
  std::mt19937_64 rng(8);
  const Matrix Y = two_blobs(15, 0.05, rng);
  std::vector<int> perm(30);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix Yp(30, 2);
  for (int i = 0; i < 30; ++i) Yp.row(i) = Y.row(perm[i]);
  const auto a = dp_means(Y, {}), b = dp_means(Yp, {});
  std::vector<int> back(30);
  for (int i = 0; i < 30; ++i) back[perm[i]] = b.labels[i];
  EXPECT_TRUE(same_partition(a.labels, back));
}

TEST(DPMeans, RejectsBadInput) {
  DPMeansConfig cfg;
  cfg.lambda = 0;
  EXPECT_THROW(dp_means(Matrix::Zero(3, 1), cfg), ConfigError);
  Matrix Y = Matrix::Zero(3, 1);
  Y(1, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(dp_means(Y, {}), InputError);
}

TEST(KMeans, RecoversTwoBlobsWithTrueK) {
  std::mt19937_64 rng(9);
  const Matrix Y = two_blobs(20, 0.1, rng);
  KMeansConfig kc;
  kc.k = 2;
  kc.seed = 3;
  const auto c = kmeans(Y, kc);
  std::vector<int> truth(40);
  for (int i = 0; i < 40; ++i) truth[i] = i < 20 ? 0 : 1;
  EXPECT_TRUE(same_partition(c.labels, truth));
  EXPECT_THROW(kmeans(Y, KMeansConfig{41, 1, 10, 0}), InputError);
}

TEST(DPMM, IdenticalPointsFormOneCluster) {
  const Matrix Y = Matrix::Constant(6, 2, 0.3);
  for (double alpha0 : {0.1, 0.5, 1.0}) {
    DPMMConfig cfg;
    cfg.alpha0 = alpha0;
    cfg.n_iter = 200;
    cfg.n_burnin = 50;
    const auto r = dpmm_gibbs(Y, cfg);
    EXPECT_EQ(r.map.k, 1) << "alpha0 " << alpha0;
    // Exact comparison of the collapsed joint density: one block beats every split.
    const double one = dpmm_log_joint(Y, {0, 0, 0, 0, 0, 0}, alpha0, cfg.sigma, cfg.rho);
    for (const auto& rgs : all_partitions(6))
      if (testing_support::block_count(rgs) > 1) EXPECT_LT(dpmm_log_joint(Y, rgs, alpha0, cfg.sigma, cfg.rho), one);
  }
}

TEST(DPMM, SinglePoint) {
  const auto r = dpmm_gibbs(Matrix::Constant(1, 3, 2.0), {});
  EXPECT_EQ(r.map.k, 1);
  EXPECT_EQ(r.coclustering(0, 0), 1.0);
}

TEST(DPMM, SeparatedBlobsCoClusterWithinAndNotAcross) {
  std::mt19937_64 rng(10);
  const Matrix Y = two_blobs(10, 0.05, rng);
  DPMMConfig cfg;
  cfg.n_iter = 2200;
  cfg.n_burnin = 200;
  cfg.seed = 4;
  const auto r = dpmm_gibbs(Y, cfg);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) {
      if ((i < 10) == (j < 10)) EXPECT_GE(r.coclustering(i, j), 0.95);
      else EXPECT_LE(r.coclustering(i, j), 0.05);
    }
  // Oracle: DP-means on the same points finds the same two blocks.
  EXPECT_TRUE(same_partition(r.map.labels, dp_means(Y, {}).labels));
  for (int k : r.k_trace) {
    EXPECT_GE(k, 1);
    EXPECT_LE(k, 20);
  }
}

TEST(DPMM, DeterministicGivenSeed) {
  std::mt19937_64 rng(11);
  const Matrix Y = two_blobs(8, 0.2, rng);
  DPMMConfig cfg;
  cfg.n_iter = 300;
  cfg.n_burnin = 50;
  cfg.seed = 9;
  const auto a = dpmm_gibbs(Y, cfg), b = dpmm_gibbs(Y, cfg);
  EXPECT_EQ(a.map.labels, b.map.labels);
  EXPECT_TRUE((a.coclustering.array() == b.coclustering.array()).all());
  EXPECT_EQ(a.map_log_density, b.map_log_density);
}
