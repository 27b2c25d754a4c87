#pragma once
// Replicate-ensemble drivers: expand an ExperimentSpec into a deterministic
// ResultTable or a vector of check cells. Replicates run in a parallel pool
// with one RNG substream each, so the output is independent of scheduling;
// a replicate that throws is recorded and the remaining rows are still built.

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nglab/concentration.hpp"
#include "nglab/experiment.hpp"
#include "nglab/graphical.hpp"
#include "nglab/model.hpp"
#include "nglab/observables.hpp"
#include "nglab/ode.hpp"
#include "nglab/reduced.hpp"
#include "nglab/rng.hpp"
#include "nglab/stats.hpp"

namespace nglab {

// Stream tag for reduced-chain replicates, disjoint from the per-edge tag
// used by the graphical engine and from plain agent-engine streams.
inline constexpr std::uint64_t kChainStreamTag = 1ull << 62;

// One substream per (grid position, replicate); n values stay below 2^31 and
// replicate counts below 2^32, so the pair packs losslessly.
inline std::uint64_t ensemble_stream(std::int64_t n, std::int64_t replicate) {
  return (static_cast<std::uint64_t>(n) << 32) |
         static_cast<std::uint64_t>(replicate);
}

inline std::vector<std::int64_t> spec_n_values(const ExperimentSpec& spec) {
  if (!spec.n_grid.empty()) return spec.n_grid;
  return {spec.n};
}

inline RateMode rate_mode_of(const ExperimentSpec& spec) {
  return spec.mode == "exact" ? RateMode::kExact : RateMode::kNormalized;
}

// Initial reduced-chain counts: empty or "half" splits the population evenly
// with no shared-vocabulary agents; otherwise "x,y,z" literal counts.
inline ReducedState parse_reduced_init(const std::string& init,
                                       std::int64_t n) {
  if (init.empty() || init == "half") {
    return {n / 2, n - n / 2, 0};
  }
  ReducedState s;
  char tail = '\0';
  if (std::sscanf(init.c_str(), "%" SCNd64 ",%" SCNd64 ",%" SCNd64 "%c", &s.x,
                  &s.y, &s.z, &tail) != 3) {
    throw std::invalid_argument("init must be empty, 'half', or 'x,y,z'");
  }
  if (s.x < 0 || s.y < 0 || s.z < 0 || s.n() != n) {
    throw std::invalid_argument("init counts must be nonnegative and sum to n");
  }
  return s;
}

// Comma-separated doubles for ODE starts; count must match what the system
// expects.
inline std::vector<double> parse_real_init(const std::string& init,
                                           std::size_t count,
                                           const std::vector<double>& fallback) {
  if (init.empty()) return fallback;
  std::vector<double> out;
  std::stringstream in(init);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(std::stod(item));
  if (out.size() != count) {
    throw std::invalid_argument("init needs exactly " + std::to_string(count) +
                                " comma-separated values");
  }
  return out;
}

struct ReplicateFailure {
  std::int64_t n = 0;
  std::int64_t replicate = 0;
  std::string message;
};

struct EnsembleResult {
  ResultTable table;
  std::vector<ReplicateFailure> failures;
  bool ok() const { return failures.empty(); }
};

namespace detail {

// Runs fn over replicates of one grid value, trapping per-replicate errors so
// the surviving rows can still be emitted in replicate order.
template <class Fn>
inline void for_each_replicate(std::int64_t n, std::int64_t reps, int threads,
                               std::vector<ReplicateFailure>& failures,
                               Fn&& fn) {
  std::mutex gate;
  run_replicates(reps, threads, [&](std::int64_t rep) {
    try {
      fn(rep);
    } catch (const std::exception& e) {
      const std::lock_guard<std::mutex> lock(gate);
      failures.push_back({n, rep, e.what()});
    }
  });
}

inline int resolve_threads(int threads) {
  return threads >= 0 ? threads : resolve_thread_count();
}

}  // namespace detail

// Creation phase: run the full model from the all-mute start until every
// agent holds a word; X counts invented words, To is the time that happens.
inline EnsembleResult run_early_phase(const ExperimentSpec& spec,
                                      int threads = -1) {
  validate(spec);
  const int pool = detail::resolve_threads(threads);
  EnsembleResult result{ResultTable({"n", "replicate", "seed", "X", "To"},
                                    {ColumnKind::kInteger, ColumnKind::kInteger,
                                     ColumnKind::kInteger, ColumnKind::kInteger,
                                     ColumnKind::kReal}),
                        {}};
  for (const std::int64_t n : spec_n_values(spec)) {
    if (spec.engine == "graphical" && n > GraphicalSim::kMaxAgents) {
      throw std::invalid_argument("graphical engine is capped at 64 agents");
    }
    struct Row {
      std::int64_t x = -1;
      double to = 0.0;
    };
    std::vector<Row> rows(static_cast<std::size_t>(spec.reps));
    detail::for_each_replicate(
        n, spec.reps, pool, result.failures, [&](std::int64_t rep) {
          const auto stream = ensemble_stream(n, rep);
          std::int64_t x = 0;
          double to = 0.0;
          const auto drain = [&](auto& sim) {
            while (sim.configuration().mute_count() > 0) {
              if (sim.step().outcome == Outcome::kInvention) ++x;
            }
            to = sim.time();
          };
          if (spec.engine == "graphical") {
            GraphicalSim sim(Configuration(static_cast<int>(n)), spec.seed,
                             stream);
            drain(sim);
          } else {
            auto sim = AgentClockSim::all_mute(static_cast<int>(n),
                                               Rng(spec.seed, stream));
            drain(sim);
          }
          rows[static_cast<std::size_t>(rep)] = {x, to};
        });
    for (std::int64_t rep = 0; rep < spec.reps; ++rep) {
      const auto& row = rows[static_cast<std::size_t>(rep)];
      if (row.x < 0) continue;  // replicate failed; reported separately
      result.table.append_row({static_cast<double>(n),
                               static_cast<double>(rep),
                               static_cast<double>(spec.seed),
                               static_cast<double>(row.x), row.to});
    }
  }
  return result;
}

// Snapshot series of the tracked observables on a uniform time grid. The
// default horizon is n^0.4, the plateau window endpoint used by the
// middle-phase checks. Only snapshots are kept, never event traces.
inline EnsembleResult run_series(const ExperimentSpec& spec,
                                 int threads = -1) {
  validate(spec);
  const int pool = detail::resolve_threads(threads);
  EnsembleResult result{
      ResultTable({"n", "replicate", "seed", "t", "alive", "created", "extinct",
                   "max_cluster", "agreements", "mute"},
                  {ColumnKind::kInteger, ColumnKind::kInteger,
                   ColumnKind::kInteger, ColumnKind::kReal, ColumnKind::kInteger,
                   ColumnKind::kInteger, ColumnKind::kInteger,
                   ColumnKind::kInteger, ColumnKind::kInteger,
                   ColumnKind::kInteger}),
      {}};
  for (const std::int64_t n : spec_n_values(spec)) {
    if (spec.engine == "graphical" && n > GraphicalSim::kMaxAgents) {
      throw std::invalid_argument("graphical engine is capped at 64 agents");
    }
    const double horizon = spec.horizon > 0.0
                               ? spec.horizon
                               : std::pow(static_cast<double>(n), 0.4);
    const auto steps = static_cast<int>(horizon / spec.snapshot_dt *
                                        (1.0 + 1e-12));
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(steps) + 1);
    for (int k = 0; k <= steps; ++k) {
      grid.push_back(spec.snapshot_dt * static_cast<double>(k));
    }
    std::vector<std::vector<SeriesRow>> all(
        static_cast<std::size_t>(spec.reps));
    detail::for_each_replicate(
        n, spec.reps, pool, result.failures, [&](std::int64_t rep) {
          const auto stream = ensemble_stream(n, rep);
          if (spec.engine == "graphical") {
            GraphicalSim sim(Configuration(static_cast<int>(n)), spec.seed,
                             stream);
            Observables obs(sim.configuration());
            sim.attach(&obs);
            all[static_cast<std::size_t>(rep)] =
                collect_series(sim, obs, grid);
          } else {
            auto sim = AgentClockSim::all_mute(static_cast<int>(n),
                                               Rng(spec.seed, stream));
            Observables obs(sim.configuration());
            sim.attach(&obs);
            all[static_cast<std::size_t>(rep)] =
                collect_series(sim, obs, grid);
          }
        });
    for (std::int64_t rep = 0; rep < spec.reps; ++rep) {
      for (const SeriesRow& row : all[static_cast<std::size_t>(rep)]) {
        result.table.append_row(
            {static_cast<double>(n), static_cast<double>(rep),
             static_cast<double>(spec.seed), row.t,
             static_cast<double>(row.alive), static_cast<double>(row.created),
             static_cast<double>(row.deleted),
             static_cast<double>(row.max_cluster),
             static_cast<double>(row.agreements),
             static_cast<double>(row.mute)});
      }
    }
  }
  return result;
}

// Consensus phase: reduced two-word chain from the configured initial split,
// run until absorption; one row per replicate with the absorption time and
// which side won.
inline EnsembleResult run_final_phase(const ExperimentSpec& spec,
                                      int threads = -1) {
  validate(spec);
  const int pool = detail::resolve_threads(threads);
  const RateMode mode = rate_mode_of(spec);
  EnsembleResult result{
      ResultTable({"n", "replicate", "seed", "x0", "y0", "z0",
                   "consensus_time", "winner"},
                  {ColumnKind::kInteger, ColumnKind::kInteger,
                   ColumnKind::kInteger, ColumnKind::kInteger,
                   ColumnKind::kInteger, ColumnKind::kInteger,
                   ColumnKind::kReal, ColumnKind::kInteger}),
      {}};
  for (const std::int64_t n : spec_n_values(spec)) {
    const ReducedState init = parse_reduced_init(spec.init, n);
    struct Row {
      double tc = -1.0;
      int winner = 0;
    };
    std::vector<Row> rows(static_cast<std::size_t>(spec.reps));
    detail::for_each_replicate(
        n, spec.reps, pool, result.failures, [&](std::int64_t rep) {
          ReducedChain chain(
              init, mode,
              Rng(spec.seed, kChainStreamTag | ensemble_stream(n, rep)));
          while (!chain.absorbed()) chain.step();
          rows[static_cast<std::size_t>(rep)] = {
              chain.time(), chain.state().x > 0 ? 0 : 1};
        });
    for (std::int64_t rep = 0; rep < spec.reps; ++rep) {
      const auto& row = rows[static_cast<std::size_t>(rep)];
      if (row.tc < 0.0) continue;
      result.table.append_row(
          {static_cast<double>(n), static_cast<double>(rep),
           static_cast<double>(spec.seed), static_cast<double>(init.x),
           static_cast<double>(init.y), static_cast<double>(init.z), row.tc,
           static_cast<double>(row.winner)});
    }
  }
  return result;
}

// Deterministic limit trajectory sampled on the snapshot grid; the system
// field picks the coordinates (and so the columns).
inline ResultTable ode_trajectory_table(const ExperimentSpec& spec) {
  validate(spec);
  const double horizon = spec.horizon > 0.0 ? spec.horizon : 30.0;
  const OdeOptions opts{spec.h, 1e-9};
  if (spec.system == "two-word") {
    const auto init = parse_real_init(spec.init, 2, {0.5, 0.5});
    const auto traj =
        two_word_trajectory(init[0], init[1], horizon, spec.snapshot_dt, opts);
    ResultTable table({"t", "x", "y", "z"},
                      {ColumnKind::kReal, ColumnKind::kReal, ColumnKind::kReal,
                       ColumnKind::kReal});
    for (const auto& row : traj) {
      table.append_row({row.t, row.y[0], row.y[1], 1.0 - row.y[0] - row.y[1]});
    }
    return table;
  }
  if (spec.system == "asymmetry") {
    const auto init = parse_real_init(spec.init, 2, {0.0, 0.0});
    const auto traj =
        asymmetry_trajectory(init[0], init[1], horizon, spec.snapshot_dt, opts);
    ResultTable table({"t", "u", "z"},
                      {ColumnKind::kReal, ColumnKind::kReal, ColumnKind::kReal});
    for (const auto& row : traj) table.append_row({row.t, row.y[0], row.y[1]});
    return table;
  }
  const auto init = parse_real_init(spec.init, 1, {0.0});
  ResultTable table({"t", "z"}, {ColumnKind::kReal, ColumnKind::kReal});
  const auto steps =
      static_cast<int>(horizon / spec.snapshot_dt * (1.0 + 1e-12));
  for (int k = 0; k <= steps; ++k) {
    const double t = spec.snapshot_dt * static_cast<double>(k);
    table.append_row({t, overlap_at(init[0], t, opts)});
  }
  return table;
}

// ---- Bound-verification suites -------------------------------------------

// Counting-process concentration: unit-rate Poisson deviations plus the
// asymmetry coordinate of the reduced chain, both against e^{-lambda a}.
inline std::vector<CheckCell> azuma_suite_cells(std::uint64_t seed) {
  auto cells = azuma_poisson_cells(1.0, 0.4, {5.0}, 10.0, 10000, seed);
  auto reduced = azuma_reduced_cells(1000, 125.0, {0.01}, 3.0, 1000, seed + 1);
  cells.insert(cells.end(), reduced.begin(), reduced.end());
  return cells;
}

// Exact-CDF tail cells over the full mean grid, plus a Monte Carlo family at
// one mean as a sampling cross-check.
inline std::vector<CheckCell> poisson_tail_suite_cells(std::uint64_t seed) {
  std::vector<CheckCell> cells;
  for (const double lam : {1.0, 10.0, 100.0, 1000.0}) {
    std::vector<double> xs;
    for (const double x : {0.5, 1.0, 2.0, std::sqrt(lam)}) {
      if (x <= std::sqrt(lam) && (xs.empty() || x > xs.back())) {
        xs.push_back(x);
      }
    }
    const std::int64_t mc = lam == 10.0 ? 20000 : 0;
    auto part = poisson_tail_cells(lam, xs, mc, seed);
    cells.insert(cells.end(), part.begin(), part.end());
  }
  return cells;
}

// Last-exit times above and below the sqrt-width envelope around a unit-rate
// Poisson path: the half-width family from the narrative example plus a
// full-width family at later grid times where both bounds bite.
inline std::vector<CheckCell> last_passage_suite_cells(std::uint64_t seed) {
  auto cells = last_passage_cells(1.0, 0.5, 0.5, {8.0, 12.0, 16.0}, 4000, seed);
  auto wide =
      last_passage_cells(1.0, 0.5, 1.0, {16.0, 36.0, 64.0}, 4000, seed + 1);
  cells.insert(cells.end(), wide.begin(), wide.end());
  return cells;
}

// Closed-form inequality cells: incomplete-gamma style tail bounds checked by
// quadrature, and the reciprocal expansion over its parameter grid.
inline std::vector<CheckCell> appendix_suite_cells() {
  std::vector<CheckCell> cells;
  cells.push_back(exp_tail_cell(0.0, 1.0, 1.0, 2.0));
  cells.push_back(exp_tail_cell(3.0, 1.0, 1.0, 10.0));
  cells.push_back(exp_tail_cell(0.0, 2.0, 1.0, 2.0));
  cells.push_back(exp_tail_cell(0.5, 1.5, 2.0, 3.0));
  cells.push_back(exp_tail_cell(0.5, 0.5, 1.0, 16.0));
  for (const double lam : {1.0, 4.0, 9.0, 100.0}) {
    for (const double alpha : {0.25, 0.5}) {
      cells.push_back(recip_bound_cell(lam, alpha));
    }
  }
  return cells;
}

// Branching-dominator property cells: the growth envelope across clock rates
// and the cluster-size domination comparison at two population sizes.
inline std::vector<CheckCell> branching_suite_cells(std::uint64_t seed) {
  std::vector<CheckCell> cells;
  std::vector<double> grid;
  for (double t = 2.0; t <= 100.0; t += 2.0) grid.push_back(t);
  for (const double r : {0.5, 0.9, 1.0}) {
    cells.push_back(branching_envelope_cell({2.0, r}, grid, 1000, seed));
  }
  for (const std::int64_t n : {std::int64_t{100}, std::int64_t{1000}}) {
    auto part = domination_cells(n, 2.0, {1.0, 3.0, 5.0}, n == 100 ? 60 : 40,
                                 1500, seed + static_cast<std::uint64_t>(n));
    cells.insert(cells.end(), part.begin(), part.end());
  }
  return cells;
}

inline nlohmann::json cells_to_json(const std::vector<CheckCell>& cells) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& c : cells) {
    out.push_back({{"name", c.name},
                   {"params", c.params},
                   {"empirical", c.empirical},
                   {"bound", c.bound},
                   {"se", c.se},
                   {"pass", c.pass},
                   {"trials", c.trials},
                   {"hits", c.hits}});
  }
  return out;
}

// Full falsification report: every suite family, grouped, with a global flag.
inline nlohmann::json verify_report(std::uint64_t seed) {
  const auto azuma = azuma_suite_cells(seed);
  const auto tails = poisson_tail_suite_cells(seed + 101);
  const auto exits = last_passage_suite_cells(seed + 202);
  const auto closed = appendix_suite_cells();
  const auto branching = branching_suite_cells(seed + 303);
  bool ok = all_pass(azuma) && all_pass(tails) && all_pass(exits) &&
            all_pass(closed) && all_pass(branching);
  return {{"seed", seed},
          {"deviation_bounds", cells_to_json(azuma)},
          {"poisson_tails", cells_to_json(tails)},
          {"last_exit_times", cells_to_json(exits)},
          {"closed_form_inequalities", cells_to_json(closed)},
          {"branching_dominator", cells_to_json(branching)},
          {"all_pass", ok}};
}

// ---- Engine-equivalence checks -------------------------------------------

struct EquivalenceReport {
  Chi2Result creation;   // invented-word distribution, both engines, n = 5
  KsResult consensus;    // absorption time, projected full model vs chain, n = 4
  std::int64_t reps = 0;
  bool pass() const {
    return creation.p_value > 0.01 && consensus.p_value > 0.01;
  }
};

// Runs the per-edge-clock engine against the aggregate-clock engine on the
// invented-word count, and the projected full model against the reduced chain
// on the absorption time. Matching laws are the null hypothesis; small
// p-values flag an engine bug.
inline EquivalenceReport run_equivalence(std::int64_t reps, std::uint64_t seed,
                                         int threads = -1) {
  if (reps < 1000) {
    throw std::invalid_argument("equivalence needs at least 1000 replicates");
  }
  const int pool = detail::resolve_threads(threads);
  EquivalenceReport report;
  report.reps = reps;

  constexpr int kCreationAgents = 5;
  std::vector<std::int64_t> agent_x(static_cast<std::size_t>(reps));
  std::vector<std::int64_t> graph_x(static_cast<std::size_t>(reps));
  run_replicates(reps, pool, [&](std::int64_t rep) {
    const auto count_inventions = [](auto& sim) {
      std::int64_t x = 0;
      while (sim.configuration().mute_count() > 0) {
        if (sim.step().outcome == Outcome::kInvention) ++x;
      }
      return x;
    };
    auto agent = AgentClockSim::all_mute(
        kCreationAgents, Rng(seed, ensemble_stream(kCreationAgents, rep)));
    agent_x[static_cast<std::size_t>(rep)] = count_inventions(agent);
    GraphicalSim graph(Configuration(kCreationAgents), seed,
                       ensemble_stream(kCreationAgents, rep));
    graph_x[static_cast<std::size_t>(rep)] = count_inventions(graph);
  });
  std::vector<std::int64_t> agent_hist(kCreationAgents, 0);
  std::vector<std::int64_t> graph_hist(kCreationAgents, 0);
  for (std::int64_t rep = 0; rep < reps; ++rep) {
    ++agent_hist[static_cast<std::size_t>(
        agent_x[static_cast<std::size_t>(rep)] - 1)];
    ++graph_hist[static_cast<std::size_t>(
        graph_x[static_cast<std::size_t>(rep)] - 1)];
  }
  report.creation = chi2_two_sample(agent_hist, graph_hist);

  constexpr std::int64_t kConsensusAgents = 4;
  std::vector<double> full_tc(static_cast<std::size_t>(reps));
  std::vector<double> chain_tc(static_cast<std::size_t>(reps));
  run_replicates(reps, pool, [&](std::int64_t rep) {
    AgentClockSim full(
        Configuration::from_vocabularies(
            static_cast<int>(kConsensusAgents), {{0}, {0}, {2}, {2}}),
        Rng(seed, ensemble_stream(kConsensusAgents, rep)));
    full_tc[static_cast<std::size_t>(rep)] = run_until(
        full, [](const Configuration& c) { return c.is_consensus(); });
    ReducedChain chain(
        {2, 2, 0}, RateMode::kExact,
        Rng(seed, kChainStreamTag | ensemble_stream(kConsensusAgents, rep)));
    while (!chain.absorbed()) chain.step();
    chain_tc[static_cast<std::size_t>(rep)] = chain.time();
  });
  report.consensus = ks_two_sample(full_tc, chain_tc);
  return report;
}

inline nlohmann::json equivalence_report_json(const EquivalenceReport& r) {
  return {{"reps", r.reps},
          {"creation_chi2",
           {{"statistic", r.creation.statistic},
            {"df", r.creation.df},
            {"p_value", r.creation.p_value}}},
          {"consensus_ks",
           {{"statistic", r.consensus.statistic},
            {"p_value", r.consensus.p_value}}},
          {"all_pass", r.pass()}};
}

// ---- Output metadata ------------------------------------------------------

inline std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

// Companion metadata for a written table: the resolved experiment settings
// that produced it, a digest of them for cache keys, and any per-replicate
// failures.
inline nlohmann::json table_metadata(const ExperimentSpec& spec,
                                     const ResultTable& table,
                                     const std::vector<ReplicateFailure>& bad) {
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : bad) {
    failures.push_back(
        {{"n", f.n}, {"replicate", f.replicate}, {"message", f.message}});
  }
  const std::string spec_text = to_json(spec).dump();
  nlohmann::json columns = nlohmann::json::array();
  for (const auto& name : table.names()) columns.push_back(name);
  return {{"spec", to_json(spec)},
          {"spec_digest", fnv1a_hex(spec_text)},
          {"seed", spec.seed},
          {"build", "nglab 0.1.0"},
          {"rows", table.rows()},
          {"columns", columns},
          {"failures", failures}};
}

}  // namespace nglab
