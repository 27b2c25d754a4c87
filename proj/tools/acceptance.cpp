// Acceptance gate: one line per criterion, [PASS]/[FAIL] with the measured
// values, the pinned tolerance, and wall time. Exit code is the number of
// failed criteria. --only selects a subset, --seed re-rolls the ensembles.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nglab/concentration.hpp"
#include "nglab/drivers.hpp"
#include "nglab/experiment.hpp"
#include "nglab/model.hpp"
#include "nglab/observables.hpp"
#include "nglab/ode.hpp"
#include "nglab/reduced.hpp"
#include "nglab/stats.hpp"

namespace nglab {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream out;
  out << std::setprecision(precision) << v;
  return out.str();
}

// Criterion 1: creation moments at n=100. Mean and variance of the number of
// invented words against the closed forms n/2 and (n/4)(n-2)/(2n-3), each
// within 3 standard errors over 1e5 replicates; must finish inside a minute.
Outcome creation_moments(std::uint64_t seed, double elapsed_limit,
                         double* elapsed) {
  ExperimentSpec spec;
  spec.kind = ExperimentKind::kEarlyPhase;
  spec.n = 100;
  spec.reps = 100000;
  spec.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  const EnsembleResult result = run_early_phase(spec);
  *elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                           start)
                 .count();
  Summary x;
  for (const double v : result.table.column("X")) x.add(v);
  const double mean_target = 50.0;
  const double var_target = 25.0 * 98.0 / 197.0;
  const bool mean_ok = std::abs(x.mean() - mean_target) <= 3.0 * x.se_mean();
  const bool var_ok =
      std::abs(x.variance() - var_target) <= 3.0 * x.se_variance();
  const bool time_ok = *elapsed <= elapsed_limit;
  Outcome o;
  o.pass = result.ok() && mean_ok && var_ok && time_ok;
  o.detail = "mean X " + fmt(x.mean(), 6) + " vs 50 (tol " +
             fmt(3.0 * x.se_mean(), 3) + "), var " + fmt(x.variance(), 6) +
             " vs " + fmt(var_target, 6) + " (tol " +
             fmt(3.0 * x.se_variance(), 3) + ")" +
             (time_ok ? "" : ", over the time budget");
  return o;
}

// Criterion 2: the time for every agent to hold a word grows like log(n)/2.
// Log-slope fit of the mean over n = 2^8..2^14, 200 replicates each, must
// land in [0.45, 0.55].
Outcome spread_time_scaling(std::uint64_t seed, double elapsed_limit,
                            double* elapsed) {
  ExperimentSpec spec;
  spec.kind = ExperimentKind::kEarlyPhase;
  spec.n_grid = {256, 512, 1024, 2048, 4096, 8192, 16384};
  spec.reps = 200;
  spec.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  const EnsembleResult result = run_early_phase(spec);
  *elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                           start)
                 .count();
  const FitResult fit =
      fit_log_slope(group_means(result.table, "n", "To"));
  const bool time_ok = *elapsed <= elapsed_limit;
  Outcome o;
  o.pass = result.ok() && fit.slope >= 0.45 && fit.slope <= 0.55 && time_ok;
  o.detail = "slope " + fmt(fit.slope) + " +- " + fmt(fit.se_slope, 3) +
             " (band [0.45, 0.55], r2 " + fmt(fit.r2) + ")" +
             (time_ok ? "" : ", over the time budget");
  return o;
}

// Criterion 3: the mute count tracks n e^{-2t} within 5 percent relative
// error on [0, 0.4 log n] at n=1e4, averaged over 200 replicates.
Outcome mute_decay_curve(std::uint64_t seed) {
  constexpr int kAgents = 10000;
  constexpr int kReps = 200;
  const double t_max = 0.4 * std::log(static_cast<double>(kAgents));
  constexpr int kPoints = 20;
  std::vector<double> sums(kPoints + 1, 0.0);
  for (int rep = 0; rep < kReps; ++rep) {
    auto sim = AgentClockSim::all_mute(
        kAgents, Rng(seed, ensemble_stream(kAgents, rep)));
    for (int k = 0; k <= kPoints; ++k) {
      run_until_time(sim, t_max * k / kPoints);
      sums[static_cast<std::size_t>(k)] += sim.configuration().mute_count();
    }
  }
  double worst = 0.0;
  double worst_t = 0.0;
  for (int k = 0; k <= kPoints; ++k) {
    const double t = t_max * k / kPoints;
    const double target = kAgents * std::exp(-2.0 * t);
    const double mean = sums[static_cast<std::size_t>(k)] / kReps;
    const double gap = std::abs(mean / target - 1.0);
    if (gap > worst) {
      worst = gap;
      worst_t = t;
    }
  }
  Outcome o;
  o.pass = worst <= 0.05;
  o.detail = "max relative gap " + fmt(100.0 * worst, 3) + "% at t=" +
             fmt(worst_t, 3) + " (tol 5%)";
  return o;
}

// Criterion 4: the alive-word count plateaus at n/2. At n=1e4 the whole
// window [0.6 log n, n^0.4] must stay within 0.1 n of n/2 in at least 95 of
// 100 runs.
Outcome alive_plateau(std::uint64_t seed, double elapsed_limit,
                      double* elapsed) {
  constexpr int kAgents = 10000;
  constexpr int kRuns = 100;
  const double a = 0.6 * std::log(static_cast<double>(kAgents));
  const double b = std::pow(static_cast<double>(kAgents), 0.4);
  const double band = 0.1 * kAgents;
  const auto start = std::chrono::steady_clock::now();
  int good = 0;
  double worst = 0.0;
  for (int run = 0; run < kRuns; ++run) {
    auto sim = AgentClockSim::all_mute(
        kAgents, Rng(seed, ensemble_stream(kAgents, run)));
    Observables obs(sim.configuration());
    sim.attach(&obs);
    run_until_time(sim, a);
    double dev = std::abs(static_cast<double>(obs.alive_count()) -
                          kAgents / 2.0);
    while (sim.peek_next_time() <= b) {
      sim.step();
      dev = std::max(dev, std::abs(static_cast<double>(obs.alive_count()) -
                                   kAgents / 2.0));
    }
    if (dev <= band) ++good;
    worst = std::max(worst, dev);
  }
  *elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                           start)
                 .count();
  const bool time_ok = *elapsed <= elapsed_limit;
  Outcome o;
  o.pass = good >= 95 && time_ok;
  o.detail = std::to_string(good) + "/100 runs stayed within " +
             fmt(band, 4) + " of " + fmt(kAgents / 2.0, 4) +
             " on the window (need 95, worst " + fmt(worst, 4) + ")" +
             (time_ok ? "" : ", over the time budget");
  return o;
}

// Criterion 5: absorption time of the reduced chain grows like gamma log n.
// Log-slope over n = 2^10..2^17 from the even split, 200 replicates each:
// slope in [2.5, 3.8] and gamma inside the fitted 95 percent CI or the band.
Outcome consensus_time_scaling(std::uint64_t seed, double elapsed_limit,
                               double* elapsed) {
  ExperimentSpec spec;
  spec.kind = ExperimentKind::kFinalPhase;
  spec.n_grid = {1024, 2048, 4096, 8192, 16384, 32768, 65536, 131072};
  spec.reps = 200;
  spec.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  const EnsembleResult result = run_final_phase(spec);
  *elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                           start)
                 .count();
  const FitResult fit =
      fit_log_slope(group_means(result.table, "n", "consensus_time"));
  const double gamma = consensus_rate_constant();
  const double half_width =
      t975(static_cast<int>(spec.n_grid.size()) - 2) * fit.se_slope;
  const bool in_band = fit.slope >= 2.5 && fit.slope <= 3.8;
  const bool gamma_ok = (gamma >= fit.slope - half_width &&
                         gamma <= fit.slope + half_width) ||
                        (gamma >= 2.5 && gamma <= 3.8);
  const bool time_ok = *elapsed <= elapsed_limit;
  Outcome o;
  o.pass = result.ok() && in_band && gamma_ok && time_ok;
  o.detail = "slope " + fmt(fit.slope) + " (band [2.5, 3.8]), CI95 [" +
             fmt(fit.slope - half_width) + ", " + fmt(fit.slope + half_width) +
             "], gamma " + fmt(gamma) +
             (time_ok ? "" : ", over the time budget");
  return o;
}

// Criterion 6: along final-phase runs at n=1e4, the time-average of the
// overlap share over the middle third of the pre-absorption window sits
// within 0.03 of sqrt(5)-2 in at least 90 of 100 runs. The window needs the
// absorption time first, so each run is replayed from its own substream.
Outcome overlap_plateau(std::uint64_t seed) {
  constexpr std::int64_t kAgents = 10000;
  constexpr int kRuns = 100;
  const ReducedState init{kAgents / 2, kAgents / 2, 0};
  const double target = overlap_fixed_point();
  int good = 0;
  double worst = 0.0;
  for (int run = 0; run < kRuns; ++run) {
    const Rng rng(seed, kChainStreamTag | ensemble_stream(kAgents, run));
    ReducedChain first(init, RateMode::kNormalized, rng);
    while (!first.absorbed()) first.step();
    const double tc = first.time();
    const double wa = tc / 3.0;
    const double wb = 2.0 * tc / 3.0;

    ReducedChain replay(init, RateMode::kNormalized, rng);
    double integral = 0.0;
    while (replay.time() < wb) {
      const double t0 = replay.time();
      const double t1 = std::min(replay.peek_next_time(), wb);
      const double lo = std::max(t0, wa);
      if (t1 > lo) integral += z_of(replay.state()) * (t1 - lo);
      if (replay.peek_next_time() >= wb) break;
      replay.step();
    }
    const double zbar = integral / (wb - wa);
    const double gap = std::abs(zbar - target);
    if (gap <= 0.03) ++good;
    worst = std::max(worst, gap);
  }
  Outcome o;
  o.pass = good >= 90;
  o.detail = std::to_string(good) + "/100 runs averaged within 0.03 of " +
             fmt(target, 5) + " (need 90, worst gap " + fmt(worst, 3) + ")";
  return o;
}

// Criterion 7: the two full-model engines agree in law, and the projected
// full model agrees with the reduced chain: chi-square on the invented-word
// count at n=5 and KS on the absorption time at n=4, both p > 0.01 at 1e5
// replicates.
Outcome engine_equivalence(std::uint64_t seed) {
  const EquivalenceReport report = run_equivalence(100000, seed);
  Outcome o;
  o.pass = report.pass();
  o.detail = "creation chi2 p " + fmt(report.creation.p_value, 3) +
             ", absorption KS p " + fmt(report.consensus.p_value, 3) +
             " (need > 0.01)";
  return o;
}

// Criterion 8: the limit ODE reaches its fixed point, and the reduced chain
// at n=1e5 tracks the integrated asymmetry/overlap system within sup-distance
// 0.02 up to t=10 in at least 95 of 100 runs.  Chain and ODE start from the
// same asymmetric data (u=1/2, z=0): the asymmetry direction is exponentially
// unstable, so from a symmetric start the chain's root-n seed noise is
// amplified far past any fixed tolerance and no law-of-large-numbers
// statement about the pair (u, z) holds pathwise.
Outcome limit_ode_tracking(std::uint64_t seed) {
  const auto shares = two_word_at(0.5, 0.5, 30.0);
  const double z_gap =
      std::abs(1.0 - shares[0] - shares[1] - overlap_fixed_point());
  const bool fixed_point_ok = z_gap < 1e-6;

  constexpr std::int64_t kAgents = 100000;
  constexpr int kRuns = 100;
  const ReducedState init{3 * kAgents / 4, kAgents / 4, 0};
  const auto ode = asymmetry_trajectory(u_of(init), z_of(init), 10.0, 0.01);
  int good = 0;
  double worst = 0.0;
  for (int run = 0; run < kRuns; ++run) {
    ReducedChain chain(init, RateMode::kNormalized,
                       Rng(seed, kChainStreamTag |
                                     ensemble_stream(kAgents, run)));
    double dev = 0.0;
    for (const OdeSample& sample : ode) {
      while (!chain.absorbed() && chain.peek_next_time() <= sample.t) {
        chain.step();
      }
      dev = std::max(dev,
                     std::max(std::abs(u_of(chain.state()) - sample.y[0]),
                              std::abs(z_of(chain.state()) - sample.y[1])));
    }
    if (dev <= 0.02) ++good;
    worst = std::max(worst, dev);
  }
  Outcome o;
  o.pass = fixed_point_ok && good >= 95;
  o.detail = "|z(30) - z*| " + fmt(z_gap, 2) + " (tol 1e-6); " +
             std::to_string(good) +
             "/100 paths within sup-distance 0.02 (need 95, worst " +
             fmt(worst, 3) + ")";
  return o;
}

std::string cell_tally(const std::vector<CheckCell>& cells,
                       std::string* failures) {
  int pass = 0;
  for (const auto& c : cells) {
    if (c.pass) {
      ++pass;
    } else if (failures->size() < 200) {
      *failures += " " + c.name + "[" + c.params + "]";
    }
  }
  return std::to_string(pass) + "/" + std::to_string(cells.size());
}

// Criterion 9: the concentration falsification suite reports zero
// statistically significant violations across all four bound families.
Outcome concentration_bounds(std::uint64_t seed, double elapsed_limit,
                             double* elapsed) {
  const auto start = std::chrono::steady_clock::now();
  const auto azuma = azuma_suite_cells(seed);
  const auto tails = poisson_tail_suite_cells(seed + 101);
  const auto exits = last_passage_suite_cells(seed + 202);
  const auto closed = appendix_suite_cells();
  *elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                           start)
                 .count();
  std::string failures;
  const std::string tally = "deviation " + cell_tally(azuma, &failures) +
                            ", tails " + cell_tally(tails, &failures) +
                            ", last-exit " + cell_tally(exits, &failures) +
                            ", closed-form " + cell_tally(closed, &failures);
  const bool time_ok = *elapsed <= elapsed_limit;
  Outcome o;
  o.pass = all_pass(azuma) && all_pass(tails) && all_pass(exits) &&
           all_pass(closed) && time_ok;
  o.detail = tally + (failures.empty() ? "" : "; failing:" + failures) +
             (time_ok ? "" : ", over the time budget");
  return o;
}

// Criterion 10: the branching majorant holds. The growth envelope is rarely
// exceeded at b=2 across clock rates, and pooled cluster sizes in the full
// model stay under the branching quantiles at n = 100 and 1000.
Outcome branching_domination(std::uint64_t seed) {
  const auto cells = branching_suite_cells(seed + 303);
  std::string failures;
  const std::string tally = cell_tally(cells, &failures);
  Outcome o;
  o.pass = all_pass(cells);
  o.detail = tally + " cells pass" +
             (failures.empty() ? "" : "; failing:" + failures);
  return o;
}

struct Criterion {
  int id;
  std::string name;
  std::function<Outcome(std::uint64_t, double*)> run;
};

int run_all(const std::vector<int>& only, std::uint64_t seed) {
  const std::vector<Criterion> criteria{
      {1, "creation-moments",
       [](std::uint64_t s, double* e) {
         return creation_moments(s, 60.0, e);
       }},
      {2, "spread-time-scaling",
       [](std::uint64_t s, double* e) {
         return spread_time_scaling(s, 600.0, e);
       }},
      {3, "mute-decay-curve",
       [](std::uint64_t s, double* e) {
         (void)e;
         return mute_decay_curve(s);
       }},
      {4, "alive-plateau",
       [](std::uint64_t s, double* e) { return alive_plateau(s, 1200.0, e); }},
      {5, "consensus-time-scaling",
       [](std::uint64_t s, double* e) {
         return consensus_time_scaling(s, 1800.0, e);
       }},
      {6, "overlap-plateau",
       [](std::uint64_t s, double* e) {
         (void)e;
         return overlap_plateau(s);
       }},
      {7, "engine-equivalence",
       [](std::uint64_t s, double* e) {
         (void)e;
         return engine_equivalence(s);
       }},
      {8, "limit-ode-tracking",
       [](std::uint64_t s, double* e) {
         (void)e;
         return limit_ode_tracking(s);
       }},
      {9, "concentration-bounds",
       [](std::uint64_t s, double* e) {
         return concentration_bounds(s, 600.0, e);
       }},
      {10, "branching-domination",
       [](std::uint64_t s, double* e) {
         (void)e;
         return branching_domination(s);
       }},
  };

  int failed = 0;
  for (const auto& criterion : criteria) {
    if (!only.empty() &&
        std::find(only.begin(), only.end(), criterion.id) == only.end()) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    double inner = 0.0;
    Outcome outcome;
    try {
      outcome = criterion.run(seed, &inner);
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double total = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start)
                             .count();
    std::printf("[%s] %2d %-24s %s  (%.1f s)\n",
                outcome.pass ? "PASS" : "FAIL", criterion.id,
                criterion.name.c_str(), outcome.detail.c_str(), total);
    std::fflush(stdout);
    if (!outcome.pass) ++failed;
  }
  return failed;
}

}  // namespace
}  // namespace nglab

int main(int argc, char** argv) {
  CLI::App app{"Acceptance gate: every criterion prints one line"};
  std::vector<int> only;
  std::uint64_t seed = 20240822;
  app.add_option("--only", only, "criterion ids to run (default: all)")
      ->delimiter(',');
  app.add_option("--seed", seed, "master seed for all ensembles");
  CLI11_PARSE(app, argc, argv);
  return nglab::run_all(only, seed);
}
