#include "nglab/concentration.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "nglab/rng.hpp"
#include "nglab/stats.hpp"

namespace nglab {
namespace {

TEST(CompensatorTracker, IntegratesPiecewiseExactly) {
  CompensatorTracker tracker;
  tracker.advance(2.0, 0.5, 0.25);
  EXPECT_DOUBLE_EQ(tracker.deviation(), -1.0);
  EXPECT_DOUBLE_EQ(tracker.variance(), 0.5);
  EXPECT_DOUBLE_EQ(tracker.elapsed(), 2.0);
  tracker.jump(1.5);
  EXPECT_DOUBLE_EQ(tracker.deviation(), 0.5);
  tracker.advance(1.0, -1.0, 0.0);
  EXPECT_DOUBLE_EQ(tracker.deviation(), 1.5);
  EXPECT_DOUBLE_EQ(tracker.variance(), 0.5);
  EXPECT_DOUBLE_EQ(tracker.elapsed(), 3.0);
}

TEST(CheckCells, FrequencyCellArithmetic) {
  const CheckCell cell = make_frequency_cell("demo", "p=1", 100, 7, 0.05);
  EXPECT_DOUBLE_EQ(cell.empirical, 0.07);
  EXPECT_NEAR(cell.se, std::sqrt(0.07 * 0.93 / 100.0), 1e-15);
  EXPECT_TRUE(cell.pass);  // 0.07 <= 0.05 + 3 * 0.0255

  const CheckCell vacuous = make_frequency_cell("demo", "", 10, 10, 1.0);
  EXPECT_TRUE(vacuous.pass);

  const CheckCell biased = make_frequency_cell("demo", "", 100, 7, 0.12, 0.2);
  EXPECT_FALSE(biased.pass);  // 0.07 + 0.2 > 0.12 + 3 se

  EXPECT_THROW(make_frequency_cell("demo", "", 0, 0, 0.5),
               std::invalid_argument);

  EXPECT_TRUE(make_exact_cell("demo", "", 0.3, 0.4).pass);
  EXPECT_FALSE(make_exact_cell("demo", "", 0.5, 0.4).pass);
}

TEST(AzumaCells, PoissonCountingProcessRespectsBound) {
  const std::vector<double> as{2.0, 5.0, 10.0, 20.0};
  const auto cells = azuma_poisson_cells(1.0, 0.4, as, 20.0, 3000, 71001);
  ASSERT_EQ(cells.size(), 8u);
  for (const auto& cell : cells) {
    EXPECT_TRUE(cell.pass) << cell.name << " " << cell.params << " empirical "
                           << cell.empirical << " bound " << cell.bound;
  }
  EXPECT_NEAR(cells[0].bound, std::exp(-0.8), 1e-15);
  // The loosest level is exercised, not vacuous.
  EXPECT_GT(cells[0].hits + cells[1].hits, 0);
}

TEST(AzumaCells, RejectsScaleOutsideSupermartingaleRange) {
  EXPECT_THROW(azuma_poisson_cells(1.0, 0.6, {1.0}, 5.0, 10, 1),
               std::invalid_argument);
  EXPECT_THROW(azuma_poisson_cells(1.0, 0.4, {-1.0}, 5.0, 10, 1),
               std::invalid_argument);
  // Jumps of the asymmetry are 2/n, so lambda = 2.5 at n = 8 is too large.
  EXPECT_THROW(azuma_reduced_cells(8, 2.5, {0.5}, 2.0, 10, 1),
               std::invalid_argument);
  EXPECT_THROW(azuma_reduced_cells(7, 1.0, {0.5}, 2.0, 10, 1),
               std::invalid_argument);
}

TEST(AzumaCells, ReducedAsymmetryRespectsBound) {
  const std::vector<double> as{0.2, 0.5, 1.0};
  const auto cells = azuma_reduced_cells(40, 5.0, as, 3.0, 1200, 71002);
  ASSERT_EQ(cells.size(), 6u);
  for (const auto& cell : cells) {
    EXPECT_TRUE(cell.pass) << cell.name << " " << cell.params << " empirical "
                           << cell.empirical << " bound " << cell.bound;
  }
  EXPECT_GT(cells[0].hits + cells[1].hits, 0);
}

TEST(PoissonTailCells, ExactTailsSitUnderTheirBounds) {
  const std::vector<std::pair<double, std::vector<double>>> plan{
      {1.0, {0.5, 1.0}},
      {10.0, {0.5, 1.0, 2.0, std::sqrt(10.0)}},
      {100.0, {0.5, 1.0, 2.0, 10.0}},
      {1000.0, {0.5, 1.0, 2.0, std::sqrt(1000.0)}}};
  for (const auto& [mean, xs] : plan) {
    const auto cells = poisson_tail_cells(mean, xs, 0, 0);
    ASSERT_EQ(cells.size(), 2 * xs.size());
    for (const auto& cell : cells) {
      EXPECT_TRUE(cell.pass) << cell.name << " " << cell.params << " value "
                             << cell.empirical << " bound " << cell.bound;
    }
    EXPECT_NEAR(cells[0].bound, std::exp(-0.5 * xs[0] * xs[0]), 1e-15);
    EXPECT_NEAR(cells[1].bound, std::exp(-xs[0] * xs[0] / 3.0), 1e-15);
  }
  EXPECT_THROW(poisson_tail_cells(4.0, {2.5}, 0, 0), std::invalid_argument);
  EXPECT_THROW(poisson_tail_cells(4.0, {0.0}, 0, 0), std::invalid_argument);
}

TEST(PoissonTailCells, MonteCarloAgreesWithBounds) {
  const auto cells = poisson_tail_cells(10.0, {1.0, 2.0}, 20000, 71003);
  ASSERT_EQ(cells.size(), 8u);  // two exact and two Monte Carlo cells per x
  for (const auto& cell : cells) {
    EXPECT_TRUE(cell.pass) << cell.name << " " << cell.params;
  }
}

TEST(LastPassageCells, ExitTimesRespectBounds) {
  const std::vector<double> ts{36.0, 64.0, 100.0};
  const auto cells = last_passage_cells(4.0, 0.25, 1.0, ts, 1200, 71004);
  ASSERT_EQ(cells.size(), 6u);
  for (const auto& cell : cells) {
    EXPECT_TRUE(cell.pass) << cell.name << " " << cell.params << " empirical "
                           << cell.empirical << " bound " << cell.bound;
  }
  // 6 t^(1/2) exp(-(rate t)^(1/2) / 3) at t = 36, rate = 4.
  EXPECT_NEAR(cells[0].bound, 36.0 * std::exp(-4.0), 1e-12);
  EXPECT_NEAR(cells[1].bound, 24.0 * std::exp(-6.0), 1e-12);
}

TEST(LastPassageCells, HalvedSlackKeepsConsistentExponents) {
  const std::vector<double> ts{16.0, 50.0, 100.0};
  const auto cells = last_passage_cells(4.0, 0.4, 0.5, ts, 1200, 71005);
  for (const auto& cell : cells) {
    EXPECT_TRUE(cell.pass) << cell.name << " " << cell.params << " empirical "
                           << cell.empirical << " bound " << cell.bound;
  }
  // kappa = 1/2 turns the exponent divisors into 12 and 8.
  EXPECT_NEAR(cells[2].bound,
              6.0 * std::pow(50.0, 0.2) * std::exp(-std::pow(200.0, 0.8) / 12.0),
              1e-12);
  EXPECT_NEAR(cells[3].bound,
              4.0 * std::pow(50.0, 0.2) * std::exp(-std::pow(200.0, 0.8) / 8.0),
              1e-12);
}

TEST(LastPassageCells, EnforcesPreconditions) {
  EXPECT_THROW(last_passage_cells(0.5, 0.25, 1.0, {36.0}, 10, 1),
               std::invalid_argument);
  EXPECT_THROW(last_passage_cells(4.0, 0.25, 1.0, {4.0}, 10, 1),
               std::invalid_argument);
  EXPECT_THROW(last_passage_cells(4.0, 0.25, 0.0, {36.0}, 10, 1),
               std::invalid_argument);
  EXPECT_THROW(last_passage_cells(4.0, 0.25, 1.0, {64.0, 36.0}, 10, 1),
               std::invalid_argument);
  EXPECT_THROW(last_passage_cells(4.0, 0.7, 1.0, {36.0}, 10, 1),
               std::invalid_argument);
}

TEST(ReciprocalExpansion, HandValuesAndDomain) {
  const CheckCell cell = recip_bound_cell(4.0, 0.5);
  EXPECT_NEAR(cell.empirical, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(cell.bound, 0.4, 1e-15);
  EXPECT_TRUE(cell.pass);
  EXPECT_TRUE(recip_bound_cell(9.0, 0.25).pass);
  EXPECT_THROW(recip_bound_cell(4.0, 1.5), std::invalid_argument);
}

TEST(ExponentialTail, QuadratureMatchesFrozenValues) {
  // int_10^inf t^3 e^-t dt = 1366 e^-10.
  const double cubic = exp_tail_integral(3.0, 1.0, 1.0, 10.0);
  EXPECT_NEAR(cubic, 0.062016304055554312, 1e-10 * 0.062);
  EXPECT_NEAR(cubic, 1366.0 * std::exp(-10.0), 1e-10 * 0.062);
  // int_2^inf e^(-t^2) dt.
  EXPECT_NEAR(exp_tail_integral(0.0, 2.0, 1.0, 2.0), 0.0041455346903363317,
              1e-10 * 0.0041);
  // int_3^inf sqrt(t) e^(-2 t^1.5) dt.
  EXPECT_NEAR(exp_tail_integral(0.5, 1.5, 2.0, 3.0), 1.0222523007078368e-05,
              1e-8 * 1.02e-05);
  // int_16^inf sqrt(t) e^(-sqrt(t)) dt = 52 e^-4.
  EXPECT_NEAR(exp_tail_integral(0.5, 0.5, 1.0, 16.0), 52.0 * std::exp(-4.0),
              1e-10);
}

TEST(ExponentialTail, ClosedFormBoundDominatesIntegral) {
  EXPECT_NEAR(exp_tail_bound(3.0, 1.0, 1.0, 10.0),
              1000.0 * std::exp(-10.0) / 0.7, 1e-12);
  // 1 + a - beta < 0 caps the denominator at beta c.
  EXPECT_NEAR(exp_tail_bound(0.0, 2.0, 1.0, 2.0), 0.5 * std::exp(-4.0) / 2.0,
              1e-15);
  EXPECT_TRUE(exp_tail_cell(3.0, 1.0, 1.0, 10.0).pass);
  EXPECT_TRUE(exp_tail_cell(0.0, 2.0, 1.0, 2.0).pass);
  EXPECT_TRUE(exp_tail_cell(0.5, 0.5, 1.0, 16.0).pass);
  // 1 + a - beta = 0 makes the bound exact; the slack keeps equality passing.
  EXPECT_TRUE(exp_tail_cell(0.5, 1.5, 2.0, 3.0).pass);
  EXPECT_TRUE(exp_tail_cell(0.0, 1.0, 1.0, 2.0).pass);
  EXPECT_THROW(exp_tail_bound(3.0, 1.0, 0.25, 10.0), std::invalid_argument);
  // beta c fails to clear (1 + a - beta) x^-beta: out of the bound's domain.
  EXPECT_THROW(exp_tail_bound(0.5, 0.5, 1.0 / 3.0, 16.0),
               std::invalid_argument);
  EXPECT_THROW(exp_tail_integral(3.0, -1.0, 1.0, 10.0), std::invalid_argument);
}

TEST(Branching, PathsGrowAndFreezingEnlargesThem) {
  BranchingParams params;
  params.b = 1.0;
  params.r = 1.0;
  const std::vector<double> grid{1.0, 2.0, 5.0};

  Summary live, frozen;
  for (int rep = 0; rep < 1500; ++rep) {
    Rng rng_live(81001, static_cast<std::uint64_t>(rep));
    const auto path = branching_path(params, grid, rng_live);
    ASSERT_EQ(path.size(), grid.size());
    EXPECT_GE(path[0], 1);
    EXPECT_LE(path[0], path[1]);
    EXPECT_LE(path[1], path[2]);
    live.add(static_cast<double>(path[2]));

    Rng rng_frozen(81002, static_cast<std::uint64_t>(rep));
    BranchingOptions opts;
    opts.frozen = true;
    const auto fpath = branching_path(params, grid, rng_frozen, opts);
    frozen.add(static_cast<double>(fpath[2]));
  }
  const double se = std::hypot(live.se_mean(), frozen.se_mean());
  EXPECT_GT(frozen.mean(), live.mean() + 5.0 * se);
}

TEST(Branching, CoupledPairDominatesPathwiseWithExactMarginals) {
  BranchingParams params;
  params.b = 2.0;
  params.r = 1.0;
  std::vector<double> grid;
  for (int k = 1; k <= 10; ++k) grid.push_back(0.5 * k);

  Summary pair_live, pair_frozen, solo_live, solo_frozen;
  for (int rep = 0; rep < 800; ++rep) {
    Rng rng(81003, static_cast<std::uint64_t>(rep));
    const auto pair = branching_pair_path(params, grid, rng);
    ASSERT_EQ(pair.live.size(), grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      ASSERT_GE(pair.frozen[i], pair.live[i]) << "grid point " << i;
    }
    pair_live.add(static_cast<double>(pair.live.back()));
    pair_frozen.add(static_cast<double>(pair.frozen.back()));

    Rng rng_live(81003, static_cast<std::uint64_t>(rep) + (1ull << 20));
    solo_live.add(
        static_cast<double>(branching_path(params, grid, rng_live).back()));
    Rng rng_frozen(81003, static_cast<std::uint64_t>(rep) + (1ull << 21));
    BranchingOptions opts;
    opts.frozen = true;
    const auto fpath = branching_path(params, grid, rng_frozen, opts);
    solo_frozen.add(static_cast<double>(fpath.back()));
  }
  EXPECT_LT(std::fabs(pair_live.mean() - solo_live.mean()),
            5.0 * std::hypot(pair_live.se_mean(), solo_live.se_mean()));
  EXPECT_LT(std::fabs(pair_frozen.mean() - solo_frozen.mean()),
            5.0 * std::hypot(pair_frozen.se_mean(), solo_frozen.se_mean()));
}

TEST(Branching, GrowsWithFertilityAndShrinksWithClockRate) {
  const std::vector<double> grid{5.0};
  const auto mean_at = [&](double b, double r, std::uint64_t seed) {
    BranchingParams params;
    params.b = b;
    params.r = r;
    Summary s;
    for (int rep = 0; rep < 1500; ++rep) {
      Rng rng(seed, static_cast<std::uint64_t>(rep));
      s.add(static_cast<double>(branching_path(params, grid, rng)[0]));
    }
    return std::pair<double, double>{s.mean(), s.se_mean()};
  };

  const auto [m_b1, se_b1] = mean_at(1.0, 1.0, 81004);
  const auto [m_b2, se_b2] = mean_at(2.0, 1.0, 81005);
  EXPECT_GT(m_b2, m_b1 + 5.0 * std::hypot(se_b1, se_b2));

  const auto [m_slow, se_slow] = mean_at(2.0, 0.25, 81006);
  const auto [m_fast, se_fast] = mean_at(2.0, 4.0, 81007);
  EXPECT_GT(m_slow, m_fast + 5.0 * std::hypot(se_slow, se_fast));
}

TEST(Branching, EnvelopeIsRarelyExceeded) {
  BranchingParams params;
  params.b = 2.0;
  params.r = 1.0;
  std::vector<double> grid;
  for (int k = 1; k <= 25; ++k) grid.push_back(2.0 * k);
  const CheckCell cell = branching_envelope_cell(params, grid, 300, 81008);
  EXPECT_TRUE(cell.pass) << "exceed fraction " << cell.empirical;
  EXPECT_LT(cell.empirical, 0.05);
  EXPECT_NEAR(growth_envelope(0.0, 1.0), 256.0, 1e-12);
}

TEST(Branching, CapStopsRunawayPopulations) {
  BranchingParams params;
  params.b = 50.0;
  params.r = 0.01;
  BranchingOptions opts;
  opts.cap = 20;
  Rng rng(81009, 0);
  EXPECT_THROW(branching_path(params, {5.0}, rng, opts), std::runtime_error);
}

TEST(Branching, RejectsBadArguments) {
  BranchingParams params;
  Rng rng(81010, 0);
  EXPECT_THROW(branching_path(params, {}, rng), std::invalid_argument);
  EXPECT_THROW(branching_path(params, {2.0, 1.0}, rng), std::invalid_argument);
  EXPECT_THROW(branching_path(params, {-1.0}, rng), std::invalid_argument);
  params.r = 0.0;
  EXPECT_THROW(branching_path(params, {1.0}, rng), std::invalid_argument);
}

TEST(Domination, ClusterSizesStayUnderBranchingMajorant) {
  const auto cells = domination_cells(100, 2.0, {1.0, 3.0, 5.0}, 60, 1500,
                                      91001);
  ASSERT_EQ(cells.size(), 6u);
  for (const auto& cell : cells) {
    EXPECT_TRUE(cell.pass) << cell.name << " " << cell.params << " empirical "
                           << cell.empirical << " bound " << cell.bound;
  }
}

TEST(Domination, RejectsParametersWithoutPositiveClockRate) {
  EXPECT_THROW(domination_cells(10, 20.0, {1.0}, 1, 1, 1),
               std::invalid_argument);
  EXPECT_THROW(domination_cells(4, 2.0, {1.0}, 1, 1, 1), std::invalid_argument);
}

}  // namespace
}  // namespace nglab
