#pragma once
// Incremental bookkeeping layered over a simulation: which words exist, who
// holds each word (its cluster), cluster-size extremes, how many words have
// died, and the interaction-rate functionals built from those quantities.
// Counts are relative to the configuration the tracker was constructed on.

#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "nglab/model.hpp"

namespace nglab {

class Observables : public SimObserver {
 public:
  explicit Observables(const Configuration& cfg)
      : cfg_(&cfg),
        members_(static_cast<std::size_t>(cfg.n())),
        touched_(static_cast<std::size_t>(cfg.n()), false),
        size_count_(static_cast<std::size_t>(cfg.n()) + 1, 0) {
    for (AgentId a = 0; a < cfg.n(); ++a) {
      for (const WordId w : cfg.vocabulary(a)) add_member_(w, a);
    }
    created_count_ = alive_count_;  // words already dead are not recoverable
  }

  void on_event(const InteractionEvent& ev, std::span<const WordId> sb,
                std::span<const WordId> lb, const Configuration& after) override {
    assert(&after == cfg_);
    (void)after;
    switch (ev.outcome) {
      case Outcome::kInvention:
        ++invention_count_;
        ++created_count_;
        add_member_(ev.word, ev.speaker);
        add_member_(ev.word, ev.listener);
        break;
      case Outcome::kAdoption:
        ++adoption_count_;
        add_member_(ev.word, ev.listener);
        break;
      case Outcome::kAgreement:
        ++agreement_count_;
        touch_(ev.speaker);
        touch_(ev.listener);
        for (const WordId w : sb) {
          if (w != ev.word) remove_member_(w, ev.speaker);
        }
        for (const WordId w : lb) {
          if (w != ev.word) remove_member_(w, ev.listener);
        }
        break;
    }
  }

  std::int64_t alive_count() const { return alive_count_; }
  std::int64_t created_count() const { return created_count_; }
  std::int64_t deleted_count() const { return created_count_ - alive_count_; }
  std::int64_t agreement_count() const { return agreement_count_; }
  std::int64_t adoption_count() const { return adoption_count_; }
  std::int64_t invention_count() const { return invention_count_; }
  int max_cluster_size() const { return max_size_; }

  const std::vector<AgentId>& cluster(WordId w) const {
    return members_[static_cast<std::size_t>(w)];
  }
  std::int64_t cluster_size(WordId w) const {
    return static_cast<std::int64_t>(cluster(w).size());
  }
  bool word_alive(WordId w) const { return !cluster(w).empty(); }

  // Agents that have taken part in at least one agreement. A dead word's
  // creator is always in this set: its own copy can only vanish in an
  // agreement it participates in.
  bool agent_touched(AgentId a) const {
    return touched_[static_cast<std::size_t>(a)];
  }
  std::int64_t touched_count() const { return touched_count_; }

  // Speaking-rate mass attached to word id w: counts agent w while mute, plus
  // 1/|vocabulary| for every holder of w. Sums to n over all ids.
  double word_rate(WordId w) const {
    double r = cfg_->vocabulary(w).empty() ? 1.0 : 0.0;
    for (const AgentId a : cluster(w)) {
      r += 1.0 / static_cast<double>(cfg_->vocabulary(a).size());
    }
    return r;
  }

  // Chance that a uniformly chosen partner of a holder also holds w.
  double spread(WordId w) const {
    return (static_cast<double>(cluster_size(w)) - 1.0) /
           static_cast<double>(cfg_->n() - 1);
  }

  // sum_w word_rate(w) * spread(w); bounded by the largest cluster size.
  double agreement_rate_bound() const {
    double s = 0.0;
    for (WordId w = 0; w < cfg_->n(); ++w) s += word_rate(w) * spread(w);
    return s;
  }

  bool is_consensus() const {
    return alive_count_ == 1 && cfg_->mute_count() == 0;
  }

 private:
  void add_member_(WordId w, AgentId a) {
    auto& m = members_[static_cast<std::size_t>(w)];
    bump_size_(m.size(), m.size() + 1);
    m.push_back(a);
  }

  void remove_member_(WordId w, AgentId a) {
    auto& m = members_[static_cast<std::size_t>(w)];
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i] == a) {
        m[i] = m.back();
        m.pop_back();
        bump_size_(m.size() + 1, m.size());
        return;
      }
    }
    assert(false && "agent not in the cluster it is leaving");
  }

  void bump_size_(std::size_t before, std::size_t after) {
    if (before > 0) {
      --size_count_[before];
    } else {
      ++alive_count_;
    }
    if (after > 0) {
      ++size_count_[after];
      if (static_cast<int>(after) > max_size_) {
        max_size_ = static_cast<int>(after);
      }
    } else {
      --alive_count_;
    }
    while (max_size_ > 0 && size_count_[static_cast<std::size_t>(max_size_)] == 0) {
      --max_size_;
    }
  }

  void touch_(AgentId a) {
    if (!touched_[static_cast<std::size_t>(a)]) {
      touched_[static_cast<std::size_t>(a)] = true;
      ++touched_count_;
    }
  }

  const Configuration* cfg_;
  std::vector<std::vector<AgentId>> members_;
  std::vector<bool> touched_;
  std::vector<std::int64_t> size_count_;  // index = cluster size
  int max_size_ = 0;
  std::int64_t alive_count_ = 0;
  std::int64_t created_count_ = 0;
  std::int64_t agreement_count_ = 0;
  std::int64_t adoption_count_ = 0;
  std::int64_t invention_count_ = 0;
  std::int64_t touched_count_ = 0;
};

struct SeriesRow {
  double t = 0.0;
  std::int64_t alive = 0;
  std::int64_t created = 0;
  std::int64_t deleted = 0;
  int max_cluster = 0;
  std::int64_t agreements = 0;
  int mute = 0;
};

inline std::vector<double> linear_grid(double a, double b, int steps) {
  assert(steps >= 1 && b >= a);
  std::vector<double> g;
  g.reserve(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) {
    g.push_back(a + (b - a) * static_cast<double>(i) / steps);
  }
  return g;
}

inline std::vector<double> log_grid(double a, double b, int steps) {
  assert(a > 0.0 && b >= a && steps >= 1);
  std::vector<double> g;
  g.reserve(static_cast<std::size_t>(steps) + 1);
  const double ratio = std::log(b / a);
  for (int i = 0; i <= steps; ++i) {
    g.push_back(a * std::exp(ratio * static_cast<double>(i) / steps));
  }
  return g;
}

// Advances the simulation to each grid time in turn and snapshots the tracked
// quantities. The grid must be ascending; obs must be attached to sim.
template <class Sim>
std::vector<SeriesRow> collect_series(Sim& sim, const Observables& obs,
                                      const std::vector<double>& grid) {
  std::vector<SeriesRow> rows;
  rows.reserve(grid.size());
  for (const double g : grid) {
    run_until_time(sim, g);
    SeriesRow row;
    row.t = g;
    row.alive = obs.alive_count();
    row.created = obs.created_count();
    row.deleted = obs.deleted_count();
    row.max_cluster = obs.max_cluster_size();
    row.agreements = obs.agreement_count();
    row.mute = sim.configuration().mute_count();
    rows.push_back(row);
  }
  return rows;
}

}  // namespace nglab
