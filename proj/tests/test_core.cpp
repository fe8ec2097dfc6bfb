#include "support.hpp"

using namespace bngc;

TEST(Labels, CompactInFirstAppearanceOrder) {
  std::vector<int> l{7, 3, 7, 9, 3};
  EXPECT_EQ(compact_labels(l), 3);
  EXPECT_EQ(l, (std::vector<int>{0, 1, 0, 2, 1}));
}

TEST(Labels, SamePartitionIgnoresLabelNames) {
  EXPECT_TRUE(same_partition({1, 1, 2, 2}, {5, 5, 0, 0}));
  EXPECT_FALSE(same_partition({1, 1, 2, 2}, {1, 2, 1, 2}));
  EXPECT_FALSE(same_partition({1, 1}, {1, 1, 1}));
}

TEST(Labels, ClusterSizes) {
  const auto c = make_clustering({4, 4, 1, 4});
  EXPECT_EQ(c.k, 2);
  EXPECT_EQ(c.cluster_sizes(), (std::vector<int>{3, 1}));
}

TEST(Adjacency, ValidateRejectsBadMatrices) {
  WeightedAdjacency a{Matrix::Zero(3, 3), {}};
  EXPECT_NO_THROW(validate(a));
  a.W(0, 1) = 0.5;
  EXPECT_THROW(validate(a), InputError);  // asymmetric
  a.W(1, 0) = 0.5;
  a.W(2, 2) = 1.0;
  EXPECT_THROW(validate(a), InputError);  // diagonal
  a.W(2, 2) = 0.0;
  a.W(0, 2) = a.W(2, 0) = -0.1;
  EXPECT_THROW(validate(a), InputError);  // negative
}

TEST(Streams, DerivedSeedsDependOnLabelAndIndices) {
  EXPECT_EQ(derive_seed(1, "a", {2, 3}), derive_seed(1, "a", {2, 3}));
  EXPECT_NE(derive_seed(1, "a", {2, 3}), derive_seed(1, "a", {3, 2}));
  EXPECT_NE(derive_seed(1, "a"), derive_seed(1, "b"));
  EXPECT_NE(derive_seed(1, "a"), derive_seed(2, "a"));
}

TEST(Streams, GammaAndBetaMoments) {
  Rng rng = make_stream(3, "moments");
  const int n = 200000;
  double g = 0, b = 0;
  for (int i = 0; i < n; ++i) {
    g += gamma_shape_rate(rng, 3.0, 2.0);
    b += beta_draw(rng, 2.0, 6.0);
  }
  EXPECT_NEAR(g / n, 1.5, 0.01);   // shape / rate
  EXPECT_NEAR(b / n, 0.25, 0.003);  // a / (a + b)
}

TEST(Streams, LogWeightSamplingHandlesNegativeInfinity) {
  Rng rng = make_stream(4, "lw");
  const double ninf = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_log_weights(rng, {ninf, 0.0, ninf}), 1);
  EXPECT_NEAR(log_sum_exp({std::log(2.0), std::log(3.0), ninf}), std::log(5.0), 1e-14);
}

TEST(Parallel, CoversEveryIndexOnceAndRethrows) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
  EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  EXPECT_THROW(parallel_for(10, 3,
                            [](std::size_t i) {
                              if (i == 5) throw NumericalError("boom");
                            }),
               NumericalError);
}
