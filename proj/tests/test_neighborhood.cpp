#include "support.hpp"

using namespace bngc;
using testing_support::sample_from_precision;

namespace {

SpikeSlabConfig quick_config(std::uint64_t seed = 11) {
  SpikeSlabConfig c;
  c.seed = seed;
  c.threads = 1;
  return c;
}

DataMatrix independent_data(int n, int p, std::uint64_t seed) {
  return sample_from_precision(Matrix::Identity(p, p), n, seed);
}

}  // namespace

TEST(SpikeSlab, IndependentResponseHasNegligibleCoefficients) {
  std::vector<double> freqs;
  double abs_beta = 0;
  int count = 0;
  for (std::uint64_t s = 1; s <= 40; ++s) {
    const DataMatrix d = independent_data(500, 6, s);
    const auto post = run_spike_slab_regression(d, 0, quick_config(11 + s));
    ASSERT_EQ(post.beta_bar.size(), 5);
    for (Eigen::Index j = 0; j < 5; ++j) {
      EXPECT_LT(std::abs(post.beta_bar(j)), 3.0 / std::sqrt(500.0));
      freqs.push_back(post.gamma_freq(j));
      abs_beta += std::abs(post.beta_bar(j));
      ++count;
    }
    EXPECT_GT(post.sigma2_bar, 0.0);
  }
  std::sort(freqs.begin(), freqs.end());
  EXPECT_LT(freqs[freqs.size() / 2], 0.2);
  EXPECT_LT(std::accumulate(freqs.begin(), freqs.end(), 0.0) / count, 0.2);
  EXPECT_LT(abs_beta / count, 0.05);
}

TEST(SpikeSlab, DuplicatedColumnStillFinite) {
  DataMatrix d = independent_data(100, 4, 2);
  d.values.col(3) = d.values.col(1);
  const auto est = estimate_partial_correlations(d, quick_config());
  EXPECT_TRUE(est.R.allFinite());
  for (int l = 0; l < 4; ++l) EXPECT_TRUE(run_spike_slab_regression(d, l, quick_config()).beta_bar.allFinite());
}

TEST(SpikeSlab, ThreeVariablePrecisionGivesClosedFormSign) {
  Matrix omega(3, 3);
  omega << 2, 1, 0, 1, 2, 1, 0, 1, 2;
  const DataMatrix d = sample_from_precision(omega, 2000, 3);
  const auto post = run_spike_slab_regression(d, 0, quick_config());
  const double closed_form = -omega(0, 1) / omega(0, 0);  // -0.5
  EXPECT_LT(post.beta_bar(0), 0.0);
  EXPECT_NEAR(post.beta_bar(0), closed_form, 0.1);
  EXPECT_NEAR(post.beta_bar(1), -omega(0, 2) / omega(0, 0), 0.05);
}

TEST(SpikeSlab, IdentityCovarianceGivesSmallPartialCorrelations) {
  const DataMatrix d = independent_data(2000, 8, 4);
  const auto est = estimate_partial_correlations(d, quick_config());
  for (int l = 0; l < 8; ++l)
    for (int j = 0; j < 8; ++j)
      if (l != j) EXPECT_LT(std::abs(est.R(l, j)), 0.05);
}

TEST(PartialCorrelation, CoefficientPairs) {
  EXPECT_DOUBLE_EQ(partial_correlation_from_coefficients(0.4, 0.4), 0.4);
  EXPECT_DOUBLE_EQ(partial_correlation_from_coefficients(-0.4, -0.4), -0.4);
  EXPECT_EQ(partial_correlation_from_coefficients(0.4, -0.1), 0.0);
  EXPECT_EQ(partial_correlation_from_coefficients(0.0, 0.3), 0.0);
  EXPECT_EQ(partial_correlation_from_coefficients(0.9, 1.5), 1.0);
  EXPECT_EQ(partial_correlation_from_coefficients(-1.2, -1.2), -1.0);
}

TEST(PartialCorrelation, PrecisionOracle) {
  Matrix omega(3, 3);
  omega << 2, 1, 0, 1, 2, 1, 0, 1, 2;
  const Matrix R = partial_correlations_from_precision(omega);
  EXPECT_DOUBLE_EQ(R(0, 1), -0.5);
  EXPECT_DOUBLE_EQ(R(0, 2), 0.0);
  EXPECT_DOUBLE_EQ(R(1, 1), 1.0);
}

TEST(Adjacency, FromPartialCorrelations) {
  PartialCorrelationEstimate est;
  est.R = Matrix::Identity(3, 3);
  EXPECT_TRUE(adjacency_from_partial_correlations(est).W.isZero(0));
  est.R(0, 1) = est.R(1, 0) = -0.3;
  const auto adj = adjacency_from_partial_correlations(est);
  EXPECT_DOUBLE_EQ(adj.W(0, 1), 0.3);
  EXPECT_DOUBLE_EQ(adj.W(1, 0), 0.3);
  EXPECT_EQ(adj.names, default_names(3));
}

TEST(Adjacency, ContractOnEstimatedGraphs) {
  SimDesign design;
  design.n = 150;
  design.p = 20;
  design.K = 3;
  const auto part = design_partition(design, 0);
  const auto sim = design_dataset(design, part, 0, 0);
  std::vector<RegressionPosterior> posts;
  const auto est = estimate_partial_correlations(sim.data, quick_config(), &posts);
  EXPECT_TRUE(est.R.isApprox(est.R.transpose(), 0));
  for (int l = 0; l < 20; ++l) EXPECT_EQ(est.R(l, l), 1.0);
  EXPECT_LE(est.R.cwiseAbs().maxCoeff(), 1.0);
  for (const auto& post : posts) {
    EXPECT_GE(post.gamma_freq.minCoeff(), 0.0);
    EXPECT_LE(post.gamma_freq.maxCoeff(), 1.0);
    EXPECT_GT(post.sigma2_bar, 0.0);
  }
  const auto adj = adjacency_from_partial_correlations(est);
  EXPECT_NO_THROW(validate(adj));
  EXPECT_LE(adj.W.maxCoeff(), 1.0);
}

TEST(SpikeSlab, DeterministicAndScheduleIndependent) {
  SimDesign design;
  design.n = 80;
  design.p = 12;
  design.K = 3;
  const auto sim = design_dataset(design, design_partition(design, 0), 0, 0);
  auto c1 = quick_config(5);
  auto c4 = c1;
  c4.threads = 4;
  std::vector<RegressionPosterior> a, b;
  const auto ea = estimate_partial_correlations(sim.data, c1, &a);
  const auto eb = estimate_partial_correlations(sim.data, c4, &b);
  EXPECT_TRUE((ea.R.array() == eb.R.array()).all());
  for (std::size_t l = 0; l < a.size(); ++l) {
    EXPECT_TRUE((a[l].beta_bar.array() == b[l].beta_bar.array()).all());
    EXPECT_EQ(a[l].sigma2_bar, b[l].sigma2_bar);
  }
  const auto single = run_spike_slab_regression(sim.data, 4, c1);
  EXPECT_TRUE((single.beta_bar.array() == a[4].beta_bar.array()).all());
  const auto other = estimate_partial_correlations(sim.data, quick_config(6));
  EXPECT_FALSE((other.R.array() == ea.R.array()).all());
}

TEST(SpikeSlab, RecoversSparseSupport) {
  // Chain plus long-range edges, every nonzero partial correlation of size 0.3.
  const int p = 20;
  Matrix omega = Matrix::Identity(p, p);
  for (int i = 0; i + 1 < p; ++i) omega(i, i + 1) = omega(i + 1, i) = (i % 2 ? 0.3 : -0.3);
  for (int i = 0; i + 5 < p; i += 5) omega(i, i + 5) = omega(i + 5, i) = 0.3;
  ASSERT_EQ(Eigen::LLT<Matrix>(omega).info(), Eigen::Success);
  const Matrix truth = partial_correlations_from_precision(omega);
  std::vector<double> f1s;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const DataMatrix d = sample_from_precision(omega, 1000, 100 + seed);
    const auto est = estimate_partial_correlations(d, quick_config(seed));
    int tp = 0, fp = 0, fn = 0;
    for (int l = 0; l < p; ++l)
      for (int j = l + 1; j < p; ++j) {
        const bool edge = std::abs(truth(l, j)) > 0;
        const bool found = std::abs(est.R(l, j)) > 0.1;
        const bool sign_ok = !found || !edge || (est.R(l, j) > 0) == (truth(l, j) > 0);
        tp += edge && found && sign_ok;
        fp += found && (!edge || !sign_ok);
        fn += edge && (!found || !sign_ok);
      }
    f1s.push_back(2.0 * tp / (2.0 * tp + fp + fn));
  }
  std::sort(f1s.begin(), f1s.end());
  EXPECT_GE(f1s[2], 0.9);
}

TEST(SpikeSlab, AdjacencyErrorBoundedByPartialCorrelationError) {
  // ||W - W_true|| <= ||R - R_true|| on simulated block designs.
  for (int rep = 0; rep < 3; ++rep) {
    SimDesign design;
    design.n = 200;
    design.p = 30;
    design.K = 3;
    design.seed = 40 + rep;
    const auto sim = design_dataset(design, design_partition(design, 0), 0, 0);
    const auto est = estimate_partial_correlations(sim.data, quick_config(rep));
    Matrix Wt = sim.true_partial_correlation.cwiseAbs();
    Wt.diagonal().setZero();
    const auto adj = adjacency_from_partial_correlations(est);
    const double lhs = operator_norm(adj.W - Wt);
    const double rhs = operator_norm(est.R - sim.true_partial_correlation);
    EXPECT_LE(lhs, rhs + 1e-12) << "replicate " << rep;
  }
}

TEST(SpikeSlab, RejectsBadInputAndConfig) {
  DataMatrix tiny = independent_data(2, 3, 1);
  EXPECT_THROW(estimate_partial_correlations(tiny, quick_config()), InputError);
  DataMatrix one_col = independent_data(10, 1, 1);
  EXPECT_THROW(estimate_partial_correlations(one_col, quick_config()), InputError);
  DataMatrix bad = independent_data(10, 3, 1);
  bad.values(2, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(estimate_partial_correlations(bad, quick_config()), InputError);
  auto cfg = quick_config();
  cfg.nu0 = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = quick_config();
  cfg.n_burnin = cfg.n_iter;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(run_spike_slab_regression(independent_data(10, 3, 1), 3, quick_config()), InputError);
}
