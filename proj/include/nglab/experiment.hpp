#pragma once

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nglab/stats.hpp"

namespace nglab {

// The experiment families the command line knows how to run.
enum class ExperimentKind {
  kEarlyPhase,        // invention burst: words created, last-invention time
  kMiddlePhase,       // trajectory snapshots of the full model
  kFinalPhase,        // reduced-chain consensus times over an n grid
  kOdeCompare,        // limit dynamics vs chain trajectories
  kVerifyBounds,      // concentration and tail-bound cells
  kOracleEquivalence  // agent-clock vs edge-clock engine agreement
};

inline std::string kind_to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kEarlyPhase: return "early-phase";
    case ExperimentKind::kMiddlePhase: return "middle-phase";
    case ExperimentKind::kFinalPhase: return "final-phase";
    case ExperimentKind::kOdeCompare: return "ode-compare";
    case ExperimentKind::kVerifyBounds: return "verify-bounds";
    case ExperimentKind::kOracleEquivalence: return "oracle-equivalence";
  }
  throw std::invalid_argument("unreachable experiment kind");
}

inline ExperimentKind kind_from_string(const std::string& text) {
  if (text == "early-phase") return ExperimentKind::kEarlyPhase;
  if (text == "middle-phase") return ExperimentKind::kMiddlePhase;
  if (text == "final-phase") return ExperimentKind::kFinalPhase;
  if (text == "ode-compare") return ExperimentKind::kOdeCompare;
  if (text == "verify-bounds") return ExperimentKind::kVerifyBounds;
  if (text == "oracle-equivalence") return ExperimentKind::kOracleEquivalence;
  throw std::invalid_argument("unknown experiment kind: " + text);
}

// Flat description of one experiment. Serializes to a flat key/value JSON
// object; unknown keys are rejected so typos cannot silently change a run.
struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::kEarlyPhase;
  std::int64_t n = 100;
  std::vector<std::int64_t> n_grid;  // overrides n when non-empty
  std::int64_t reps = 1;
  std::uint64_t seed = 1;
  std::string mode = "normalized";  // reduced-chain rates: exact | normalized
  std::string engine = "agent";     // full model engine: agent | graphical
  std::string system = "two-word";  // ode system: two-word | asymmetry | overlap
  std::string init;                 // initial condition, experiment-specific
  double horizon = 0.0;             // 0 = experiment default
  double snapshot_dt = 0.1;
  double h = 1e-3;                  // ODE step size
  std::int64_t paths = 0;           // 0 = experiment default
  std::string out;                  // output path stem; empty = stdout summary

  bool operator==(const ExperimentSpec&) const = default;
};

inline void validate(const ExperimentSpec& spec) {
  if (spec.reps < 1) throw std::invalid_argument("replicates must be >= 1");
  if (spec.n < 2) throw std::invalid_argument("population must be >= 2");
  for (std::size_t i = 1; i < spec.n_grid.size(); ++i) {
    if (spec.n_grid[i] <= spec.n_grid[i - 1]) {
      throw std::invalid_argument("n grid must be strictly increasing");
    }
  }
  if (!spec.n_grid.empty() && spec.n_grid.front() < 2) {
    throw std::invalid_argument("n grid entries must be >= 2");
  }
  if (spec.mode != "exact" && spec.mode != "normalized") {
    throw std::invalid_argument("mode must be exact or normalized");
  }
  if (spec.engine != "agent" && spec.engine != "graphical") {
    throw std::invalid_argument("engine must be agent or graphical");
  }
  if (spec.system != "two-word" && spec.system != "asymmetry" &&
      spec.system != "overlap") {
    throw std::invalid_argument("system must be two-word, asymmetry or overlap");
  }
  if (!(spec.h > 0.0)) throw std::invalid_argument("step size must be positive");
  if (spec.horizon < 0.0) throw std::invalid_argument("horizon must be >= 0");
  if (!(spec.snapshot_dt > 0.0)) {
    throw std::invalid_argument("snapshot spacing must be positive");
  }
  if (spec.paths < 0) throw std::invalid_argument("paths must be >= 0");
}

inline nlohmann::json to_json(const ExperimentSpec& spec) {
  return nlohmann::json{{"kind", kind_to_string(spec.kind)},
                        {"n", spec.n},
                        {"n_grid", spec.n_grid},
                        {"reps", spec.reps},
                        {"seed", spec.seed},
                        {"mode", spec.mode},
                        {"engine", spec.engine},
                        {"system", spec.system},
                        {"init", spec.init},
                        {"horizon", spec.horizon},
                        {"snapshot_dt", spec.snapshot_dt},
                        {"h", spec.h},
                        {"paths", spec.paths},
                        {"out", spec.out}};
}

inline ExperimentSpec spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("spec must be a JSON object");
  ExperimentSpec spec;
  for (const auto& [key, value] : j.items()) {
    if (key == "kind") {
      spec.kind = kind_from_string(value.get<std::string>());
    } else if (key == "n") {
      spec.n = value.get<std::int64_t>();
    } else if (key == "n_grid") {
      spec.n_grid = value.get<std::vector<std::int64_t>>();
    } else if (key == "reps") {
      spec.reps = value.get<std::int64_t>();
    } else if (key == "seed") {
      spec.seed = value.get<std::uint64_t>();
    } else if (key == "mode") {
      spec.mode = value.get<std::string>();
    } else if (key == "engine") {
      spec.engine = value.get<std::string>();
    } else if (key == "system") {
      spec.system = value.get<std::string>();
    } else if (key == "init") {
      spec.init = value.get<std::string>();
    } else if (key == "horizon") {
      spec.horizon = value.get<double>();
    } else if (key == "snapshot_dt") {
      spec.snapshot_dt = value.get<double>();
    } else if (key == "h") {
      spec.h = value.get<double>();
    } else if (key == "paths") {
      spec.paths = value.get<std::int64_t>();
    } else if (key == "out") {
      spec.out = value.get<std::string>();
    } else {
      throw std::invalid_argument("unknown spec key: " + key);
    }
  }
  validate(spec);
  return spec;
}

enum class ColumnKind { kInteger, kReal };

// Rows of named numeric columns with deterministic text formatting: integer
// columns print exactly, real columns as %.12g, so identical data gives
// byte-identical files.
class ResultTable {
 public:
  ResultTable(std::vector<std::string> names, std::vector<ColumnKind> kinds)
      : names_(std::move(names)), kinds_(std::move(kinds)) {
    if (names_.empty() || names_.size() != kinds_.size()) {
      throw std::invalid_argument("column names and kinds must align");
    }
  }

  std::size_t columns() const { return names_.size(); }
  std::size_t rows() const { return cells_.size() / columns(); }
  const std::vector<std::string>& names() const { return names_; }

  void append_row(std::span<const double> row) {
    if (row.size() != columns()) {
      throw std::invalid_argument("row width does not match table");
    }
    cells_.insert(cells_.end(), row.begin(), row.end());
  }
  void append_row(std::initializer_list<double> row) {
    append_row(std::span<const double>(row.begin(), row.size()));
  }

  double at(std::size_t row, std::size_t col) const {
    if (row >= rows() || col >= columns()) {
      throw std::out_of_range("table index out of range");
    }
    return cells_[row * columns() + col];
  }

  std::size_t column_index(const std::string& name) const {
    for (std::size_t c = 0; c < names_.size(); ++c) {
      if (names_[c] == name) return c;
    }
    throw std::invalid_argument("unknown column: " + name);
  }

  std::vector<double> column(const std::string& name) const {
    const std::size_t c = column_index(name);
    std::vector<double> out;
    out.reserve(rows());
    for (std::size_t r = 0; r < rows(); ++r) out.push_back(at(r, c));
    return out;
  }

  std::string to_csv() const {
    std::string out;
    for (std::size_t c = 0; c < names_.size(); ++c) {
      if (c > 0) out += ',';
      out += names_[c];
    }
    out += '\n';
    char buf[64];
    for (std::size_t r = 0; r < rows(); ++r) {
      for (std::size_t c = 0; c < columns(); ++c) {
        if (c > 0) out += ',';
        const double v = at(r, c);
        if (kinds_[c] == ColumnKind::kInteger) {
          std::snprintf(buf, sizeof(buf), "%" PRId64,
                        static_cast<std::int64_t>(v));
        } else {
          std::snprintf(buf, sizeof(buf), "%.12g", v);
        }
        out += buf;
      }
      out += '\n';
    }
    return out;
  }

  // Parses a table written by to_csv. Column kinds are recovered from the
  // text: a column whose every cell is a plain integer literal is integer.
  static ResultTable from_csv(const std::string& text) {
    std::vector<std::string> lines;
    std::string::size_type pos = 0;
    while (pos < text.size()) {
      const auto nl = text.find('\n', pos);
      const auto end = nl == std::string::npos ? text.size() : nl;
      if (end > pos) lines.push_back(text.substr(pos, end - pos));
      pos = end + 1;
    }
    if (lines.empty()) throw std::invalid_argument("empty table text");

    const auto split = [](const std::string& line) {
      std::vector<std::string> fields;
      std::string::size_type start = 0;
      for (;;) {
        const auto comma = line.find(',', start);
        if (comma == std::string::npos) {
          fields.push_back(line.substr(start));
          return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
      }
    };

    const auto names = split(lines[0]);
    std::vector<ColumnKind> kinds(names.size(), ColumnKind::kInteger);
    std::vector<double> cells;
    const auto is_integer_literal = [](const std::string& s) {
      if (s.empty()) return false;
      std::size_t i = s[0] == '-' ? 1 : 0;
      if (i == s.size()) return false;
      for (; i < s.size(); ++i) {
        if (s[i] < '0' || s[i] > '9') return false;
      }
      return true;
    };
    for (std::size_t r = 1; r < lines.size(); ++r) {
      const auto fields = split(lines[r]);
      if (fields.size() != names.size()) {
        throw std::invalid_argument("ragged table row");
      }
      for (std::size_t c = 0; c < fields.size(); ++c) {
        if (!is_integer_literal(fields[c])) kinds[c] = ColumnKind::kReal;
        std::size_t used = 0;
        const double v = std::stod(fields[c], &used);
        if (used != fields[c].size()) {
          throw std::invalid_argument("bad numeric cell: " + fields[c]);
        }
        cells.push_back(v);
      }
    }
    ResultTable table(names, kinds);
    table.cells_ = std::move(cells);
    return table;
  }

 private:
  std::vector<std::string> names_;
  std::vector<ColumnKind> kinds_;
  std::vector<double> cells_;
};

// Writes content to path via a temporary file and rename, so readers never
// observe a partially written file. Parent directories are created.
inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& content) {
  const auto parent = path.parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream stream(tmp, std::ios::binary | std::ios::trunc);
    if (!stream) throw std::runtime_error("cannot open " + tmp);
    stream.write(content.data(),
                 static_cast<std::streamsize>(content.size()));
    if (!stream) throw std::runtime_error("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream stream(path, std::ios::binary);
  if (!stream) throw std::runtime_error("cannot open " + path.string());
  std::string content((std::istreambuf_iterator<char>(stream)),
                      std::istreambuf_iterator<char>());
  return content;
}

// Worker-pool width from the NG_THREADS environment variable: unset or 0
// means one worker per hardware thread.
inline int resolve_thread_count() {
  const char* env = std::getenv("NG_THREADS");
  long value = 0;
  if (env != nullptr && *env != '\0') {
    char* end = nullptr;
    value = std::strtol(env, &end, 10);
    if (end == nullptr || *end != '\0' || value < 0) {
      throw std::invalid_argument("NG_THREADS must be a non-negative integer");
    }
  }
  if (value == 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }
  return static_cast<int>(value);
}

// Calls fn(replicate) exactly once for every replicate in [0, count) on a
// pool of the given width. Replicates pick distinct RNG substreams and write
// results into replicate-indexed slots, so the outcome does not depend on the
// pool width or on scheduling. The first exception thrown by any replicate is
// rethrown after the pool drains.
template <class Fn>
void run_replicates(std::int64_t count, int threads, Fn&& fn) {
  if (count < 0) throw std::invalid_argument("replicate count must be >= 0");
  if (threads <= 1 || count <= 1) {
    for (std::int64_t rep = 0; rep < count; ++rep) fn(rep);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const auto worker = [&] {
    for (;;) {
      const std::int64_t rep = next.fetch_add(1);
      if (rep >= count) return;
      try {
        fn(rep);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(count);  // drain remaining work
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int width = static_cast<int>(
      std::min<std::int64_t>(threads, count));
  pool.reserve(static_cast<std::size_t>(width));
  for (int i = 0; i < width; ++i) pool.emplace_back(worker);
  for (auto& thread : pool) thread.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct GroupedMeans {
  std::vector<double> keys;   // distinct key-column values, ascending
  std::vector<double> means;  // mean of the value column within each key
  std::vector<std::int64_t> counts;
};

inline GroupedMeans group_means(const ResultTable& table,
                                const std::string& key_col,
                                const std::string& value_col) {
  const auto keys = table.column(key_col);
  const auto values = table.column(value_col);
  std::vector<double> distinct = keys;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()),
                 distinct.end());
  GroupedMeans out;
  out.keys = distinct;
  out.means.assign(distinct.size(), 0.0);
  out.counts.assign(distinct.size(), 0);
  for (std::size_t r = 0; r < keys.size(); ++r) {
    const auto it =
        std::lower_bound(distinct.begin(), distinct.end(), keys[r]);
    const auto g = static_cast<std::size_t>(it - distinct.begin());
    out.means[g] += values[r];
    ++out.counts[g];
  }
  for (std::size_t g = 0; g < distinct.size(); ++g) {
    out.means[g] /= static_cast<double>(out.counts[g]);
  }
  return out;
}

// Least squares of per-group means against the natural log of the key,
// for scaling laws of the form y = slope * ln n + intercept.
inline FitResult fit_log_slope(const GroupedMeans& groups) {
  if (groups.keys.size() < 3) {
    throw std::invalid_argument("need at least 3 distinct key values");
  }
  std::vector<double> log_keys;
  log_keys.reserve(groups.keys.size());
  for (double key : groups.keys) {
    if (!(key > 0.0)) throw std::invalid_argument("keys must be positive");
    log_keys.push_back(std::log(key));
  }
  return least_squares(log_keys, groups.means);
}

}  // namespace nglab
