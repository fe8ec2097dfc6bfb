#pragma once

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace testing_support {

// Exact posterior mean of the adherence of each source for two sources over
// two clusters, by enumeration of the global labels. Local labels are taken
// as known up to naming (both namings of the second source relative to the
// first are summed), pi is integrated against its symmetric Dirichlet prior,
// alpha has a uniform prior on [1/2, 1].
struct AlphaOracle {
  double alpha1 = 0, alpha2 = 0;
};

inline AlphaOracle two_source_alpha_oracle(const std::vector<int>& local1, const std::vector<int>& local2,
                                           double dirichlet_conc = 1.0) {
  const int n = static_cast<int>(local1.size());
  auto log_choose = [](int a, int b) { return std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(a - b + 1.0); };
  // log of the integral of t^a (1-t)^(n-a) over [1/2, 1], and the same with one more power of t
  auto log_z = [n](int a, int extra) {
    const double x = a + extra + 1.0, y = n - a + 1.0;
    return std::log(boost::math::beta(x, y)) + std::log(boost::math::ibetac(x, y, 0.5));
  };
  auto log_dirmult = [&](int n0) {
    const double c = dirichlet_conc;
    return std::lgamma(c + n0) + std::lgamma(c + n - n0) - 2 * std::lgamma(c);
  };

  std::vector<double> logw, m1, m2;
  for (int flip = 0; flip < 2; ++flip) {
    // counts of points by (first label, second label) after naming
    int cnt[2][2] = {{0, 0}, {0, 0}};
    for (int t = 0; t < n; ++t) ++cnt[local1[t]][flip ? 1 - local2[t] : local2[t]];
    const int A0 = cnt[0][0], A1 = cnt[1][1], D01 = cnt[0][1], D10 = cnt[1][0];
    for (int y0 = 0; y0 <= A0; ++y0)
      for (int y1 = 0; y1 <= A1; ++y1)
        for (int x01 = 0; x01 <= D01; ++x01)
          for (int x10 = 0; x10 <= D10; ++x10) {
            // y: agreeing points whose global label matches both; x: disagreeing points following source 1
            const int a1 = y0 + y1 + x01 + x10;
            const int a2 = y0 + y1 + (D01 - x01) + (D10 - x10);
            const int n0 = y0 + (A1 - y1) + x01 + (D10 - x10);
            const double lz1 = log_z(a1, 0), lz2 = log_z(a2, 0);
            logw.push_back(log_choose(A0, y0) + log_choose(A1, y1) + log_choose(D01, x01) + log_choose(D10, x10) +
                           lz1 + lz2 + log_dirmult(n0));
            m1.push_back(std::exp(log_z(a1, 1) - lz1));
            m2.push_back(std::exp(log_z(a2, 1) - lz2));
          }
  }
  const double top = *std::max_element(logw.begin(), logw.end());
  double total = 0;
  AlphaOracle o;
  for (std::size_t i = 0; i < logw.size(); ++i) {
    const double w = std::exp(logw[i] - top);
    total += w;
    o.alpha1 += w * m1[i];
    o.alpha2 += w * m2[i];
  }
  o.alpha1 /= total;
  o.alpha2 /= total;
  return o;
}

}  // namespace testing_support
