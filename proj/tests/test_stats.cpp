// Statistics toolbox against independently computed reference values
// (incomplete gamma, chi-square and Poisson tails, Kolmogorov distribution)
// and hand-worked small cases for the sample utilities.

#include "nglab/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "nglab/rng.hpp"

namespace nglab {
namespace {

TEST(Gamma, ReferenceValues) {
  EXPECT_NEAR(gamma_p(0.5, 0.5), 0.68268949213708585, 1e-12);
  EXPECT_NEAR(gamma_q(0.5, 0.5), 0.31731050786291115, 1e-12);
  EXPECT_NEAR(gamma_p(1.0, 2.0), 0.8646647167633873, 1e-12);
  EXPECT_NEAR(gamma_q(1.0, 2.0), 0.1353352832366127, 1e-12);
  EXPECT_NEAR(gamma_p(2.5, 1.0), 0.15085496391539038, 1e-12);
  EXPECT_NEAR(gamma_q(2.5, 1.0), 0.84914503608460956, 1e-12);
  EXPECT_NEAR(gamma_p(10.0, 10.0), 0.54207028552814784, 1e-12);
  EXPECT_NEAR(gamma_q(10.0, 10.0), 0.45792971447185232, 1e-12);
  EXPECT_NEAR(gamma_p(100.0, 90.0), 0.15822098918643007, 1e-11);
  EXPECT_NEAR(gamma_q(100.0, 90.0), 0.84177901081356998, 1e-11);
  EXPECT_NEAR(gamma_p(500.5, 470.0), 0.08424626473002686, 1e-11);
  EXPECT_NEAR(gamma_q(500.5, 470.0), 0.91575373526997317, 1e-11);
}

TEST(Gamma, EdgeCasesAndDomain) {
  EXPECT_EQ(gamma_p(3.0, 0.0), 0.0);
  EXPECT_EQ(gamma_q(3.0, 0.0), 1.0);
  EXPECT_THROW(gamma_p(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(gamma_q(1.0, -1.0), std::invalid_argument);
}

TEST(Chi2, SurvivalReferenceValues) {
  EXPECT_NEAR(chi2_sf(3.84, 1), 0.050043521248705189, 1e-12);
  EXPECT_NEAR(chi2_sf(10.0, 4), 0.040427681994512792, 1e-12);
  EXPECT_NEAR(chi2_sf(23.5, 9), 0.0051658819826256161, 1e-12);
  EXPECT_NEAR(chi2_sf(120.0, 100), 0.084406681093691774, 1e-11);
  EXPECT_EQ(chi2_sf(0.0, 5), 1.0);
  EXPECT_THROW(chi2_sf(1.0, 0), std::invalid_argument);
}

TEST(PoissonCdf, ReferenceValues) {
  EXPECT_NEAR(poisson_cdf(0, 1.0), 0.36787944117144245, 1e-13);
  EXPECT_NEAR(poisson_cdf(2, 1.0), 0.91969860292860584, 1e-13);
  EXPECT_NEAR(poisson_cdf(5, 10.0), 0.067085962879031888, 1e-13);
  EXPECT_NEAR(poisson_cdf(15, 10.0), 0.95125959669602134, 1e-13);
  EXPECT_NEAR(poisson_cdf(80, 100.0), 0.022649176642255638, 1e-12);
  EXPECT_NEAR(poisson_cdf(120, 100.0), 0.97733067092164727, 1e-12);
  EXPECT_NEAR(poisson_cdf(950, 1000.0), 0.057836292955323276, 1e-11);
  EXPECT_NEAR(poisson_cdf(1063, 1000.0), 0.97684487685697186, 1e-11);
  EXPECT_EQ(poisson_cdf(-1, 5.0), 0.0);
  EXPECT_EQ(poisson_cdf(4, 0.0), 1.0);
}

TEST(PoissonCdf, MatchesDirectSummation) {
  for (const double mean : {0.3, 2.0, 8.5}) {
    double acc = 0.0;
    for (int k = 0; k <= 20; ++k) {
      acc += std::exp(-mean + k * std::log(mean) - std::lgamma(k + 1.0));
      EXPECT_NEAR(poisson_cdf(k, mean), acc, 1e-13);
    }
  }
}

TEST(Kolmogorov, SurvivalReferenceValues) {
  EXPECT_NEAR(ks_sf(0.5), 0.96394524366487511, 1e-12);
  EXPECT_NEAR(ks_sf(0.8284), 0.49870118123785884, 1e-12);
  EXPECT_NEAR(ks_sf(1.0), 0.26999967167735456, 1e-12);
  EXPECT_NEAR(ks_sf(1.2), 0.11224966667072497, 1e-12);
  EXPECT_NEAR(ks_sf(2.0), 0.00067092525577969533, 1e-15);
  EXPECT_EQ(ks_sf(0.01), 1.0);
}

TEST(Kolmogorov, TwoSampleStatisticHandCases) {
  EXPECT_NEAR(ks_statistic({1.0, 2.0, 3.0}, {1.5, 2.5}), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(ks_statistic({1.0, 1.0, 2.0}, {1.0, 3.0}), 0.5, 1e-15);
  EXPECT_EQ(ks_statistic({1.0, 2.0}, {1.0, 2.0}), 0.0);
}

TEST(Kolmogorov, TwoSampleTestOnEqualDistributions) {
  Rng r(31, 0);
  std::vector<double> a, b;
  for (int i = 0; i < 4000; ++i) a.push_back(r.uniform01());
  for (int i = 0; i < 4000; ++i) b.push_back(r.uniform01());
  const auto res = ks_two_sample(a, b);
  EXPECT_GT(res.p_value, 1e-4);

  std::vector<double> shifted;
  for (double v : b) shifted.push_back(v + 0.2);
  EXPECT_LT(ks_two_sample(a, shifted).p_value, 1e-6);
}

TEST(Chi2TwoSample, IdenticalCountsGiveZero) {
  const auto r = chi2_two_sample({10, 10, 10}, {10, 10, 10});
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.df, 2);
  EXPECT_EQ(r.p_value, 1.0);
}

TEST(Chi2TwoSample, HandComputedStatistic) {
  const auto r = chi2_two_sample({20, 10}, {10, 20});
  EXPECT_NEAR(r.statistic, 20.0 / 3.0, 1e-12);
  EXPECT_EQ(r.df, 1);
  EXPECT_NEAR(r.p_value, chi2_sf(20.0 / 3.0, 1), 1e-15);
}

TEST(Chi2TwoSample, MergesSparseBins) {
  const auto r = chi2_two_sample({1, 0, 9, 10}, {0, 1, 9, 10});
  EXPECT_EQ(r.df, 1);  // first two bins fold into the third
  EXPECT_EQ(r.statistic, 0.0);
}

TEST(Chi2TwoSample, RejectsDegenerateInput) {
  EXPECT_THROW(chi2_two_sample({1, 2}, {1}), std::invalid_argument);
  EXPECT_THROW(chi2_two_sample({0, 0}, {1, 1}), std::invalid_argument);
  EXPECT_THROW(chi2_two_sample({3, 1}, {2, 2}), std::invalid_argument);  // df 0
}

TEST(Summary, SmallSampleMoments) {
  Summary s;
  for (double v : {1.0, 2.0, 3.0, 4.0}) s.add(v);
  EXPECT_EQ(s.count(), 4);
  EXPECT_DOUBLE_EQ(s.mean(), 2.5);
  EXPECT_NEAR(s.variance(), 5.0 / 3.0, 1e-15);
  EXPECT_NEAR(s.se_mean(), std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
}

TEST(Summary, SeVarianceMatchesTwoPassFormula) {
  Rng r(41, 0);
  std::vector<double> xs;
  Summary s;
  for (int i = 0; i < 5000; ++i) {
    const double x = r.exponential(1.0);
    xs.push_back(x);
    s.add(x);
  }
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  double m2 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = x - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  const double n = static_cast<double>(xs.size());
  const double s2 = m2 / (n - 1.0);
  const double expected =
      std::sqrt((m4 / n - (n - 3.0) / (n - 1.0) * s2 * s2) / n);
  EXPECT_NEAR(s.se_variance(), expected, 1e-10 * expected);
}

TEST(LeastSquares, ExactLine) {
  const auto f = least_squares({0.0, 1.0, 2.0, 3.0}, {1.0, 3.0, 5.0, 7.0});
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-14);
  EXPECT_NEAR(f.se_slope, 0.0, 1e-14);
  EXPECT_NEAR(f.r2, 1.0, 1e-14);
}

TEST(LeastSquares, HandComputedErrors) {
  const auto f = least_squares({0.0, 1.0, 2.0}, {0.0, 1.0, 3.0});
  EXPECT_NEAR(f.slope, 1.5, 1e-14);
  EXPECT_NEAR(f.intercept, -1.0 / 6.0, 1e-14);
  EXPECT_NEAR(f.se_slope, 0.28867513459481287, 1e-14);
}

TEST(StudentT, TableSpotChecks) {
  EXPECT_DOUBLE_EQ(t975(1), 12.706);
  EXPECT_DOUBLE_EQ(t975(10), 2.228);
  EXPECT_DOUBLE_EQ(t975(30), 2.042);
  EXPECT_DOUBLE_EQ(t975(1000), 1.960);
  EXPECT_THROW(t975(0), std::invalid_argument);
}

TEST(Quantile, LinearInterpolation) {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0}), 2.0);
}

}  // namespace
}  // namespace nglab
