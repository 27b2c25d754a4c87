#include "nglab/experiment.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "nglab/rng.hpp"

namespace nglab {
namespace {

TEST(ExperimentKinds, RoundTripAndRejection) {
  const std::vector<std::string> names{"early-phase",   "middle-phase",
                                       "final-phase",   "ode-compare",
                                       "verify-bounds", "oracle-equivalence"};
  for (const auto& name : names) {
    EXPECT_EQ(kind_to_string(kind_from_string(name)), name);
  }
  EXPECT_THROW(kind_from_string("late-phase"), std::invalid_argument);
}

TEST(ExperimentSpecs, JsonRoundTripIsLossless) {
  ExperimentSpec spec;
  spec.kind = ExperimentKind::kFinalPhase;
  spec.n = 64;
  spec.n_grid = {16, 32, 64};
  spec.reps = 250;
  spec.seed = 31337;
  spec.mode = "exact";
  spec.engine = "graphical";
  spec.system = "asymmetry";
  spec.init = "half";
  spec.horizon = 12.5;
  spec.snapshot_dt = 0.25;
  spec.h = 5e-4;
  spec.paths = 2000;
  spec.out = "runs/final";
  const ExperimentSpec back = spec_from_json(to_json(spec));
  EXPECT_EQ(back, spec);

  const ExperimentSpec minimal =
      spec_from_json(nlohmann::json{{"kind", "ode-compare"}});
  EXPECT_EQ(minimal.kind, ExperimentKind::kOdeCompare);
  EXPECT_EQ(minimal.reps, 1);
  EXPECT_EQ(minimal.mode, "normalized");
}

TEST(ExperimentSpecs, UnknownKeysAndBadValuesAreRejected) {
  EXPECT_THROW(spec_from_json(nlohmann::json{{"kind", "early-phase"},
                                             {"bogus", 1}}),
               std::invalid_argument);
  try {
    spec_from_json(nlohmann::json{{"kind", "early-phase"}, {"repz", 5}});
    FAIL() << "expected a throw";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("repz"), std::string::npos);
  }
  EXPECT_THROW(spec_from_json(nlohmann::json{{"reps", 0}}),
               std::invalid_argument);
  EXPECT_THROW(spec_from_json(nlohmann::json{{"n_grid", {8, 8}}}),
               std::invalid_argument);
  EXPECT_THROW(spec_from_json(nlohmann::json{{"mode", "fuzzy"}}),
               std::invalid_argument);
  EXPECT_THROW(spec_from_json(nlohmann::json{{"engine", "abacus"}}),
               std::invalid_argument);
  EXPECT_THROW(spec_from_json(nlohmann::json{{"h", 0.0}}),
               std::invalid_argument);
  EXPECT_THROW(spec_from_json(nlohmann::json(3)), std::invalid_argument);
}

TEST(ResultTables, FormatsColumnsByKind) {
  ResultTable table({"n", "t"}, {ColumnKind::kInteger, ColumnKind::kReal});
  table.append_row({5.0, 0.25});
  table.append_row({12.0, 1e-9});
  EXPECT_EQ(table.to_csv(), "n,t\n5,0.25\n12,1e-09\n");
  EXPECT_EQ(table.rows(), 2u);
  EXPECT_DOUBLE_EQ(table.at(1, 1), 1e-9);
  EXPECT_EQ(table.column("n"), (std::vector<double>{5.0, 12.0}));
  EXPECT_THROW(table.append_row({1.0}), std::invalid_argument);
  EXPECT_THROW(table.column("zzz"), std::invalid_argument);
  EXPECT_THROW(table.at(2, 0), std::out_of_range);
  EXPECT_THROW(ResultTable({}, {}), std::invalid_argument);
}

TEST(ResultTables, CsvRoundTripPreservesBytes) {
  ResultTable table({"n", "replicate", "value"},
                    {ColumnKind::kInteger, ColumnKind::kInteger,
                     ColumnKind::kReal});
  Rng rng(12, 0);
  for (int r = 0; r < 20; ++r) {
    table.append_row({static_cast<double>(100 + r), static_cast<double>(r),
                      rng.uniform01() * 1e3});
  }
  table.append_row({7.0, 21.0, 2.0});  // a real cell that prints like an int
  const std::string text = table.to_csv();
  const ResultTable back = ResultTable::from_csv(text);
  EXPECT_EQ(back.to_csv(), text);
  EXPECT_THROW(ResultTable::from_csv("a,b\n1\n"), std::invalid_argument);
  EXPECT_THROW(ResultTable::from_csv("a\nx\n"), std::invalid_argument);
}

TEST(AtomicWrites, ReplaceFilesWithoutLeftovers) {
  const auto dir = std::filesystem::temp_directory_path() / "nglab_test_io";
  std::filesystem::remove_all(dir);
  const auto path = dir / "nested" / "table.csv";
  write_file_atomic(path, "first\n");
  write_file_atomic(path, "second\n");
  EXPECT_EQ(read_file(path), "second\n");
  EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  std::filesystem::remove_all(dir);
}

TEST(ThreadCounts, ComeFromTheEnvironment) {
  ASSERT_EQ(setenv("NG_THREADS", "3", 1), 0);
  EXPECT_EQ(resolve_thread_count(), 3);
  ASSERT_EQ(setenv("NG_THREADS", "0", 1), 0);
  EXPECT_GE(resolve_thread_count(), 1);
  ASSERT_EQ(unsetenv("NG_THREADS"), 0);
  EXPECT_GE(resolve_thread_count(), 1);
  ASSERT_EQ(setenv("NG_THREADS", "abc", 1), 0);
  EXPECT_THROW(resolve_thread_count(), std::invalid_argument);
  ASSERT_EQ(setenv("NG_THREADS", "-2", 1), 0);
  EXPECT_THROW(resolve_thread_count(), std::invalid_argument);
  ASSERT_EQ(unsetenv("NG_THREADS"), 0);
}

TEST(ReplicatePools, RunEveryReplicateExactlyOnce) {
  constexpr int kCount = 200;
  std::vector<std::atomic<int>> calls(kCount);
  run_replicates(kCount, 4, [&](std::int64_t rep) {
    calls[static_cast<std::size_t>(rep)].fetch_add(1);
  });
  for (const auto& c : calls) EXPECT_EQ(c.load(), 1);

  EXPECT_THROW(run_replicates(50, 4,
                              [&](std::int64_t rep) {
                                if (rep == 7) {
                                  throw std::runtime_error("boom");
                                }
                              }),
               std::runtime_error);
}

TEST(ReplicatePools, ResultsDoNotDependOnPoolWidth) {
  constexpr int kCount = 500;
  const auto fill = [&](int threads) {
    std::vector<double> out(kCount);
    run_replicates(kCount, threads, [&](std::int64_t rep) {
      Rng rng(97, static_cast<std::uint64_t>(rep));
      out[static_cast<std::size_t>(rep)] = rng.uniform01();
    });
    return out;
  };
  EXPECT_EQ(fill(1), fill(4));
}

TEST(LogSlopeFits, RecoverSyntheticScaling) {
  ResultTable table({"n", "y"}, {ColumnKind::kInteger, ColumnKind::kReal});
  const std::vector<double> ns{16, 32, 64, 128, 256};
  Rng rng(55, 0);
  for (double n : ns) {
    for (int rep = 0; rep < 40; ++rep) {
      table.append_row({n, 3.0 * std::log(n) + 0.1 * (rng.uniform01() - 0.5)});
    }
  }
  const GroupedMeans groups = group_means(table, "n", "y");
  ASSERT_EQ(groups.keys.size(), 5u);
  EXPECT_EQ(groups.counts[0], 40);
  const FitResult fit = fit_log_slope(groups);
  EXPECT_NEAR(fit.slope, 3.0, 0.05);
  EXPECT_NEAR(fit.intercept, 0.0, 0.15);
  EXPECT_GT(fit.r2, 0.999);

  GroupedMeans tiny;
  tiny.keys = {8, 16};
  tiny.means = {1.0, 2.0};
  EXPECT_THROW(fit_log_slope(tiny), std::invalid_argument);
}

}  // namespace
}  // namespace nglab
