// Incremental trackers against a from-scratch recomputation along a long
// trajectory, plus exact hand-computed values of the rate functionals and the
// structural inequalities tying word deaths to agreements.

#include "nglab/observables.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "nglab/graphical.hpp"
#include "nglab/stats.hpp"

namespace nglab {
namespace {

TEST(Observables, HandComputedRates) {
  auto cfg = Configuration::from_vocabularies(4, {{1}, {1}, {1, 2}, {}});
  Observables obs(cfg);
  EXPECT_EQ(obs.alive_count(), 2);
  EXPECT_EQ(obs.created_count(), 2);
  EXPECT_EQ(obs.deleted_count(), 0);
  EXPECT_EQ(obs.cluster_size(1), 3);
  EXPECT_EQ(obs.cluster_size(2), 1);
  EXPECT_EQ(obs.max_cluster_size(), 3);

  EXPECT_DOUBLE_EQ(obs.word_rate(0), 0.0);
  EXPECT_DOUBLE_EQ(obs.word_rate(1), 2.5);       // 1 + 1 + 1/2
  EXPECT_DOUBLE_EQ(obs.word_rate(2), 0.5);
  EXPECT_DOUBLE_EQ(obs.word_rate(3), 1.0);       // mute agent's pending word
  double total = 0.0;
  for (WordId w = 0; w < 4; ++w) total += obs.word_rate(w);
  EXPECT_DOUBLE_EQ(total, 4.0);                  // always sums to n

  EXPECT_DOUBLE_EQ(obs.spread(1), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(obs.spread(2), 0.0);
  EXPECT_DOUBLE_EQ(obs.spread(3), -1.0 / 3.0);
  EXPECT_NEAR(obs.agreement_rate_bound(), 4.0 / 3.0, 1e-15);
  EXPECT_LE(obs.agreement_rate_bound(), obs.max_cluster_size());
}

TEST(Observables, MatchesFromScratchRecomputation) {
  constexpr int kN = 30;
  auto sim = AgentClockSim::all_mute(kN, Rng(271, 0));
  Observables obs(sim.configuration());
  sim.attach(&obs);

  std::set<WordId> created;  // reference bookkeeping driven by raw events
  std::int64_t agreements = 0;
  for (int step = 0; step < 3000 && !sim.configuration().is_consensus();
       ++step) {
    const auto ev = sim.step();
    if (ev.outcome == Outcome::kInvention) created.insert(ev.word);
    if (ev.outcome == Outcome::kAgreement) ++agreements;

    const auto& cfg = sim.configuration();
    const auto counts = cfg.word_counts();

    // every event: cheap structural invariants
    std::int64_t vocab_total = 0;
    for (AgentId a = 0; a < kN; ++a) {
      vocab_total += static_cast<std::int64_t>(cfg.vocabulary(a).size());
    }
    std::int64_t cluster_total = 0;
    for (WordId w = 0; w < kN; ++w) cluster_total += obs.cluster_size(w);
    ASSERT_EQ(vocab_total, cluster_total);
    ASSERT_LE(obs.deleted_count(), 2 * obs.agreement_count());
    ASSERT_LE(obs.touched_count(), 2 * obs.agreement_count());

    if (step % 25 != 0) continue;
    // every 25th event: full comparison against recomputed state
    std::int64_t alive = 0;
    int max_cluster = 0;
    for (WordId w = 0; w < kN; ++w) {
      ASSERT_EQ(obs.cluster_size(w), counts[static_cast<std::size_t>(w)]);
      if (counts[static_cast<std::size_t>(w)] > 0) ++alive;
      max_cluster = std::max(max_cluster,
                             static_cast<int>(counts[static_cast<std::size_t>(w)]));
      // cluster membership agrees with the vocabularies
      for (const AgentId a : obs.cluster(w)) ASSERT_TRUE(cfg.knows(a, w));
    }
    ASSERT_EQ(obs.alive_count(), alive);
    ASSERT_EQ(obs.max_cluster_size(), max_cluster);
    ASSERT_EQ(obs.created_count(),
              static_cast<std::int64_t>(created.size()));
    ASSERT_EQ(obs.agreement_count(), agreements);
    ASSERT_EQ(obs.invention_count(), obs.created_count());

    // a dead word's creator must have been in an agreement
    for (const WordId w : created) {
      if (counts[static_cast<std::size_t>(w)] == 0) {
        ASSERT_TRUE(obs.agent_touched(w));
      }
    }

    double rate_total = 0.0;
    for (WordId w = 0; w < kN; ++w) rate_total += obs.word_rate(w);
    ASSERT_NEAR(rate_total, static_cast<double>(kN), 1e-9);
    ASSERT_LE(obs.agreement_rate_bound(),
              static_cast<double>(obs.max_cluster_size()) + 1e-9);
  }
}

TEST(Observables, ConsensusFlagTracksConfiguration) {
  auto sim = AgentClockSim::all_mute(6, Rng(5150, 0));
  Observables obs(sim.configuration());
  sim.attach(&obs);
  while (!sim.configuration().is_consensus()) {
    ASSERT_FALSE(obs.is_consensus());
    sim.step();
  }
  EXPECT_TRUE(obs.is_consensus());
  EXPECT_EQ(obs.alive_count(), 1);
}

TEST(Observables, SeriesRowsAreConsistent) {
  auto sim = AgentClockSim::all_mute(10, Rng(909, 0));
  Observables obs(sim.configuration());
  sim.attach(&obs);
  const auto grid = linear_grid(0.0, 8.0, 16);
  const auto rows = collect_series(sim, obs, grid);
  ASSERT_EQ(rows.size(), grid.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].t, grid[i]);
    EXPECT_EQ(rows[i].deleted, rows[i].created - rows[i].alive);
    EXPECT_LE(rows[i].alive, rows[i].created);
    if (i > 0) {
      EXPECT_GE(rows[i].created, rows[i - 1].created);
      EXPECT_LE(rows[i].mute, rows[i - 1].mute);
      EXPECT_GE(rows[i].agreements, rows[i - 1].agreements);
    }
  }
  // the grid walk must not disturb the trajectory itself
  auto replay = AgentClockSim::all_mute(10, Rng(909, 0));
  run_until_time(replay, 8.0);
  EXPECT_EQ(replay.time(), sim.time());
}

TEST(Observables, GridUtilities) {
  const auto lin = linear_grid(1.0, 3.0, 4);
  ASSERT_EQ(lin.size(), 5u);
  EXPECT_DOUBLE_EQ(lin[0], 1.0);
  EXPECT_DOUBLE_EQ(lin[2], 2.0);
  EXPECT_DOUBLE_EQ(lin[4], 3.0);
  const auto lg = log_grid(1.0, 16.0, 4);
  ASSERT_EQ(lg.size(), 5u);
  EXPECT_NEAR(lg[1], 2.0, 1e-12);
  EXPECT_NEAR(lg[3], 8.0, 1e-12);
  EXPECT_NEAR(lg[4], 16.0, 1e-12);
}

TEST(Observables, WorksWithEdgeClockEngine) {
  GraphicalSim sim(Configuration(12), 77, 0);
  Observables obs(sim.configuration());
  sim.attach(&obs);
  const auto res = run_until_consensus(sim);
  EXPECT_TRUE(obs.is_consensus());
  EXPECT_EQ(obs.cluster_size(res.word), 12);
  EXPECT_EQ(obs.max_cluster_size(), 12);
}

}  // namespace
}  // namespace nglab
