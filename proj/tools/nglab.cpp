// Command-line front end: declarative experiment runs over the simulators,
// bound-verification reports, engine-equivalence checks, and scaling fits.
// Exit codes: 0 = success / all checks pass, 1 = a statistical check failed
// or a replicate was lost, 2 = usage or I/O error.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nglab/drivers.hpp"
#include "nglab/experiment.hpp"

namespace nglab {
namespace {

// Raw CLI slots plus the option handles needed to tell "explicitly set" from
// "default", so flags can override a spec file without clobbering its values.
struct SpecOptions {
  std::string spec_path;
  std::int64_t n = 100;
  std::vector<std::int64_t> n_grid;
  std::int64_t reps = 1;
  std::uint64_t seed = 1;
  std::string mode = "normalized";
  std::string engine = "agent";
  std::string system = "two-word";
  std::string init;
  double horizon = 0.0;
  double snapshot_dt = 0.1;
  double h = 1e-3;
  std::int64_t paths = 0;
  std::string out;

  CLI::Option* o_n = nullptr;
  CLI::Option* o_n_grid = nullptr;
  CLI::Option* o_reps = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_mode = nullptr;
  CLI::Option* o_engine = nullptr;
  CLI::Option* o_system = nullptr;
  CLI::Option* o_init = nullptr;
  CLI::Option* o_horizon = nullptr;
  CLI::Option* o_snapshot_dt = nullptr;
  CLI::Option* o_h = nullptr;
  CLI::Option* o_paths = nullptr;
  CLI::Option* o_out = nullptr;
};

void add_spec_options(CLI::App* cmd, SpecOptions& s) {
  cmd->add_option("--spec", s.spec_path,
                  "JSON spec file; explicit flags override its values");
  s.o_n = cmd->add_option("--n", s.n, "population size");
  s.o_n_grid = cmd->add_option("--n-grid", s.n_grid,
                               "population grid (overrides --n)")
                   ->delimiter(',');
  s.o_reps = cmd->add_option("--reps", s.reps, "replicates per grid value");
  s.o_seed = cmd->add_option("--seed", s.seed, "master seed");
  s.o_mode = cmd->add_option("--mode", s.mode, "reduced-chain rates")
                 ->check(CLI::IsMember({"exact", "normalized"}));
  s.o_engine = cmd->add_option("--engine", s.engine, "full-model engine")
                   ->check(CLI::IsMember({"agent", "graphical"}));
  s.o_system = cmd->add_option("--system", s.system, "ODE coordinate system")
                   ->check(CLI::IsMember({"two-word", "asymmetry", "overlap"}));
  s.o_init = cmd->add_option("--init", s.init, "initial condition");
  s.o_horizon = cmd->add_option("--horizon", s.horizon, "run horizon");
  s.o_snapshot_dt =
      cmd->add_option("--snapshot-dt", s.snapshot_dt, "snapshot spacing");
  s.o_h = cmd->add_option("--step", s.h, "ODE step size");
  s.o_paths = cmd->add_option("--paths", s.paths, "sample-path count");
  s.o_out = cmd->add_option("--out", s.out,
                            "output file; companion .meta.json beside it");
}

ExperimentSpec resolve_spec(const SpecOptions& s, ExperimentKind kind) {
  ExperimentSpec spec;
  if (!s.spec_path.empty()) {
    spec = spec_from_json(nlohmann::json::parse(read_file(s.spec_path)));
  }
  spec.kind = kind;
  if (s.o_n->count() > 0) spec.n = s.n;
  if (s.o_n_grid->count() > 0) spec.n_grid = s.n_grid;
  if (s.o_reps->count() > 0) spec.reps = s.reps;
  if (s.o_seed->count() > 0) spec.seed = s.seed;
  if (s.o_mode->count() > 0) spec.mode = s.mode;
  if (s.o_engine->count() > 0) spec.engine = s.engine;
  if (s.o_system->count() > 0) spec.system = s.system;
  if (s.o_init->count() > 0) spec.init = s.init;
  if (s.o_horizon->count() > 0) spec.horizon = s.horizon;
  if (s.o_snapshot_dt->count() > 0) spec.snapshot_dt = s.snapshot_dt;
  if (s.o_h->count() > 0) spec.h = s.h;
  if (s.o_paths->count() > 0) spec.paths = s.paths;
  if (s.o_out->count() > 0) spec.out = s.out;
  validate(spec);
  return spec;
}

void emit_table(const ExperimentSpec& spec, const ResultTable& table,
                const std::vector<ReplicateFailure>& failures) {
  if (spec.out.empty()) {
    std::fputs(table.to_csv().c_str(), stdout);
  } else {
    write_file_atomic(spec.out, table.to_csv());
    write_file_atomic(spec.out + ".meta.json",
                      table_metadata(spec, table, failures).dump(2) + "\n");
    std::fprintf(stdout, "wrote %s (%zu rows)\n", spec.out.c_str(),
                 table.rows());
  }
  for (const auto& f : failures) {
    std::fprintf(stderr, "replicate %" PRId64 " at n=%" PRId64 " failed: %s\n",
                 f.replicate, f.n, f.message.c_str());
  }
}

void emit_json(const std::string& out, const nlohmann::json& report) {
  const std::string text = report.dump(2) + "\n";
  if (out.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    write_file_atomic(out, text);
    std::fprintf(stdout, "wrote %s\n", out.c_str());
  }
}

int run_sim_full(const SpecOptions& s, const std::string& phase) {
  const bool early = phase == "early";
  const auto spec = resolve_spec(
      s, early ? ExperimentKind::kEarlyPhase : ExperimentKind::kMiddlePhase);
  const EnsembleResult result =
      early ? run_early_phase(spec) : run_series(spec);
  emit_table(spec, result.table, result.failures);
  return result.ok() ? 0 : 1;
}

int run_final(const SpecOptions& s) {
  const auto spec = resolve_spec(s, ExperimentKind::kFinalPhase);
  const EnsembleResult result = run_final_phase(spec);
  emit_table(spec, result.table, result.failures);
  return result.ok() ? 0 : 1;
}

int run_ode(const SpecOptions& s) {
  const auto spec = resolve_spec(s, ExperimentKind::kOdeCompare);
  const ResultTable table = ode_trajectory_table(spec);
  emit_table(spec, table, {});
  return 0;
}

int run_verify(const SpecOptions& s) {
  const auto spec = resolve_spec(s, ExperimentKind::kVerifyBounds);
  const nlohmann::json report = verify_report(spec.seed);
  emit_json(spec.out, report);
  for (const auto& [family, cells] : report.items()) {
    if (!cells.is_array()) continue;
    int pass = 0;
    for (const auto& cell : cells) pass += cell.at("pass").get<bool>() ? 1 : 0;
    std::fprintf(stderr, "%s: %d/%zu cells pass\n", family.c_str(), pass,
                 cells.size());
  }
  return report.at("all_pass").get<bool>() ? 0 : 1;
}

int run_equivalence_verb(const SpecOptions& s) {
  auto spec = resolve_spec(s, ExperimentKind::kOracleEquivalence);
  if (s.o_reps->count() == 0 && spec.reps == 1) spec.reps = 100000;
  const EquivalenceReport report = run_equivalence(spec.reps, spec.seed);
  emit_json(spec.out, equivalence_report_json(report));
  return report.pass() ? 0 : 1;
}

int run_fit(const std::string& in, const std::string& x_col,
            const std::string& y_col, const std::string& out) {
  const ResultTable table = ResultTable::from_csv(read_file(in));
  const GroupedMeans groups = group_means(table, x_col, y_col);
  const FitResult fit = fit_log_slope(groups);
  nlohmann::json per_group = nlohmann::json::array();
  for (std::size_t g = 0; g < groups.keys.size(); ++g) {
    per_group.push_back({{"key", groups.keys[g]},
                         {"mean", groups.means[g]},
                         {"count", groups.counts[g]}});
  }
  emit_json(out, {{"x", x_col},
                  {"y", y_col},
                  {"slope", fit.slope},
                  {"intercept", fit.intercept},
                  {"se_slope", fit.se_slope},
                  {"r2", fit.r2},
                  {"groups", per_group}});
  return 0;
}

int dispatch(int argc, char** argv) {
  CLI::App app{
      "Event-driven word-propagation laboratory: ensemble runs, limit-ODE "
      "trajectories, bound verification, and scaling fits"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand(
      "sim-full", "full-model ensembles (creation table or snapshot series)");
  SpecOptions sim_opts;
  std::string phase = "early";
  sim->add_option("--phase", phase, "early = X/To table, middle = series")
      ->check(CLI::IsMember({"early", "middle"}));
  add_spec_options(sim, sim_opts);

  auto* fin = app.add_subcommand(
      "final", "reduced-chain absorption ensembles over an n grid");
  SpecOptions fin_opts;
  add_spec_options(fin, fin_opts);

  auto* ode = app.add_subcommand("ode", "deterministic limit trajectories");
  SpecOptions ode_opts;
  add_spec_options(ode, ode_opts);

  auto* verify = app.add_subcommand(
      "verify", "run every bound-verification suite and report cells");
  SpecOptions verify_opts;
  add_spec_options(verify, verify_opts);

  auto* equiv = app.add_subcommand(
      "equivalence", "cross-check the engines against each other");
  SpecOptions equiv_opts;
  add_spec_options(equiv, equiv_opts);

  auto* fit = app.add_subcommand(
      "fit", "least-squares of per-group means against log group key");
  std::string fit_in, fit_x = "n", fit_y, fit_out;
  fit->add_option("--in", fit_in, "input CSV table")->required();
  fit->add_option("--x", fit_x, "grouping column (log scale)");
  fit->add_option("--y", fit_y, "value column")->required();
  fit->add_option("--out", fit_out, "output JSON file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (sim->parsed()) return run_sim_full(sim_opts, phase);
  if (fin->parsed()) return run_final(fin_opts);
  if (ode->parsed()) return run_ode(ode_opts);
  if (verify->parsed()) return run_verify(verify_opts);
  if (equiv->parsed()) return run_equivalence_verb(equiv_opts);
  return run_fit(fit_in, fit_x, fit_y, fit_out);
}

}  // namespace
}  // namespace nglab

int main(int argc, char** argv) {
  try {
    return nglab::dispatch(argc, argv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
