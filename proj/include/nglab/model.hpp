#pragma once
// Core state and interaction rule for the naming game on the complete graph.
// A configuration holds one sorted vocabulary per agent. At an interaction a
// mute speaker coins a word carrying its own id; a non-mute speaker picks a
// word uniformly from its vocabulary. A listener that knows the word collapses
// both parties to that single word, otherwise it adopts the word.

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "nglab/rng.hpp"

namespace nglab {

using AgentId = std::int32_t;
using WordId = std::int32_t;
using Vocabulary = std::vector<WordId>;  // strictly increasing word ids

enum class Outcome { kInvention, kAdoption, kAgreement };

struct InteractionEvent {
  double t = 0.0;
  AgentId speaker = -1;
  AgentId listener = -1;
  WordId word = -1;
  Outcome outcome = Outcome::kInvention;
};

// Word spoken by a non-mute agent given a uniform mark u in [0,1): entry i of
// the sorted vocabulary iff (i-1)/k <= u < i/k (1-based), i.e. floor(u*k).
inline WordId choose_word(const Vocabulary& v, double u) {
  assert(!v.empty());
  assert(u >= 0.0 && u < 1.0);
  const auto k = v.size();
  auto idx = static_cast<std::size_t>(u * static_cast<double>(k));
  if (idx >= k) idx = k - 1;  // guards against rounding at the top edge
  return v[idx];
}

class Configuration {
 public:
  explicit Configuration(int n)
      : n_(n), vocab_(check_n_(n)), mute_count_(n), singleton_count_(0) {}

  // Builds a configuration from explicit vocabularies, validating that each is
  // strictly increasing over [0,n) and that any present word's creator agent
  // is itself non-mute (word w can only exist once agent w has spoken).
  static Configuration from_vocabularies(int n, std::vector<Vocabulary> vocab) {
    Configuration cfg(n);
    if (vocab.size() != static_cast<std::size_t>(n)) {
      throw std::invalid_argument("configuration: need one vocabulary per agent");
    }
    for (const auto& v : vocab) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] < 0 || v[i] >= n) {
          throw std::invalid_argument("configuration: word id out of range");
        }
        if (i > 0 && v[i - 1] >= v[i]) {
          throw std::invalid_argument("configuration: vocabulary not sorted");
        }
      }
    }
    for (const auto& v : vocab) {
      for (const WordId w : v) {
        if (vocab[static_cast<std::size_t>(w)].empty()) {
          throw std::invalid_argument(
              "configuration: word present but its creator is mute");
        }
      }
    }
    cfg.vocab_ = std::move(vocab);
    cfg.mute_count_ = 0;
    cfg.singleton_count_ = 0;
    for (const auto& v : cfg.vocab_) {
      if (v.empty()) ++cfg.mute_count_;
      if (v.size() == 1) ++cfg.singleton_count_;
    }
    return cfg;
  }

  int n() const { return n_; }
  const Vocabulary& vocabulary(AgentId a) const {
    return vocab_[static_cast<std::size_t>(a)];
  }
  int mute_count() const { return mute_count_; }
  int singleton_count() const { return singleton_count_; }

  bool knows(AgentId a, WordId w) const {
    const auto& v = vocab_[static_cast<std::size_t>(a)];
    return std::binary_search(v.begin(), v.end(), w);
  }

  // All agents hold the same single word. The counter guard makes the common
  // (non-consensus) case O(1); the confirming scan runs only when every
  // vocabulary is a singleton.
  bool is_consensus() const {
    if (mute_count_ != 0 || singleton_count_ != n_) return false;
    const WordId w = vocab_[0][0];
    for (const auto& v : vocab_) {
      if (v[0] != w) return false;
    }
    return true;
  }

  WordId consensus_word() const {
    assert(is_consensus());
    return vocab_[0][0];
  }

  // Applies one speaker->listener interaction. u is the word-choice mark,
  // unused when the speaker is mute.
  InteractionEvent apply(AgentId speaker, AgentId listener, double u, double t) {
    assert(speaker >= 0 && speaker < n_ && listener >= 0 && listener < n_);
    assert(speaker != listener);
    auto& sv = vocab_[static_cast<std::size_t>(speaker)];
    auto& lv = vocab_[static_cast<std::size_t>(listener)];
    InteractionEvent ev;
    ev.t = t;
    ev.speaker = speaker;
    ev.listener = listener;
    if (sv.empty()) {
      ev.word = speaker;  // a coined word carries its creator's id
      ev.outcome = Outcome::kInvention;
      resize_counters_(sv.size(), 1);
      sv.push_back(ev.word);
      assert(!std::binary_search(lv.begin(), lv.end(), ev.word));
      resize_counters_(lv.size(), lv.size() + 1);
      lv.insert(std::lower_bound(lv.begin(), lv.end(), ev.word), ev.word);
    } else {
      ev.word = choose_word(sv, u);
      const auto it = std::lower_bound(lv.begin(), lv.end(), ev.word);
      if (it != lv.end() && *it == ev.word) {
        ev.outcome = Outcome::kAgreement;
        resize_counters_(sv.size(), 1);
        sv.assign(1, ev.word);
        resize_counters_(lv.size(), 1);
        lv.assign(1, ev.word);
      } else {
        ev.outcome = Outcome::kAdoption;
        resize_counters_(lv.size(), lv.size() + 1);
        lv.insert(it, ev.word);
      }
    }
    return ev;
  }

  // Number of vocabularies containing each word id (index = word id).
  std::vector<std::int64_t> word_counts() const {
    std::vector<std::int64_t> counts(static_cast<std::size_t>(n_), 0);
    for (const auto& v : vocab_) {
      for (const WordId w : v) ++counts[static_cast<std::size_t>(w)];
    }
    return counts;
  }

 private:
  static int check_n_(int n) {
    if (n < 2) throw std::invalid_argument("configuration: need n >= 2");
    return n;
  }

  void resize_counters_(std::size_t before, std::size_t after) {
    mute_count_ += (after == 0 ? 1 : 0) - (before == 0 ? 1 : 0);
    singleton_count_ += (after == 1 ? 1 : 0) - (before == 1 ? 1 : 0);
  }

  int n_;
  std::vector<Vocabulary> vocab_;
  int mute_count_;
  int singleton_count_;
};

// Gets the event stream as it happens; before-views are valid only during the
// call. after is the configuration with the event already applied.
class SimObserver {
 public:
  virtual ~SimObserver() = default;
  virtual void on_event(const InteractionEvent& ev,
                        std::span<const WordId> speaker_before,
                        std::span<const WordId> listener_before,
                        const Configuration& after) = 0;
};

// Event-driven simulator on the complete graph using one aggregate clock:
// interaction times arrive at total rate n, the speaker is uniform, the
// listener uniform among the rest. The next event time is sampled lazily and
// cached, so querying it (e.g. to stop at a grid time) never perturbs the
// trajectory.
class AgentClockSim {
 public:
  AgentClockSim(Configuration init, Rng rng)
      : cfg_(std::move(init)), rng_(rng) {}

  static AgentClockSim all_mute(int n, Rng rng) {
    return AgentClockSim(Configuration(n), rng);
  }

  double time() const { return t_; }
  const Configuration& configuration() const { return cfg_; }
  void attach(SimObserver* obs) { observers_.push_back(obs); }

  double peek_next_time() {
    if (!has_pending_) {
      double gap;
      do {
        gap = rng_.exponential(static_cast<double>(cfg_.n()));
      } while (gap <= 0.0);  // keeps event times strictly increasing
      pending_t_ = t_ + gap;
      has_pending_ = true;
    }
    return pending_t_;
  }

  InteractionEvent step() {
    peek_next_time();
    const int n = cfg_.n();
    const auto speaker =
        static_cast<AgentId>(rng_.uniform_below(static_cast<std::uint64_t>(n)));
    auto listener = static_cast<AgentId>(
        rng_.uniform_below(static_cast<std::uint64_t>(n - 1)));
    if (listener >= speaker) ++listener;
    double u = 0.0;
    if (!cfg_.vocabulary(speaker).empty()) u = rng_.uniform01();

    speaker_before_ = cfg_.vocabulary(speaker);
    listener_before_ = cfg_.vocabulary(listener);
    const auto ev = cfg_.apply(speaker, listener, u, pending_t_);
    t_ = pending_t_;
    has_pending_ = false;
    for (auto* obs : observers_) {
      obs->on_event(ev, speaker_before_, listener_before_, cfg_);
    }
    return ev;
  }

 private:
  Configuration cfg_;
  Rng rng_;
  double t_ = 0.0;
  double pending_t_ = 0.0;
  bool has_pending_ = false;
  std::vector<SimObserver*> observers_;
  Vocabulary speaker_before_, listener_before_;
};

// Steps until pred(configuration()) holds; returns the simulator time.
template <class Sim, class Pred>
double run_until(Sim& sim, Pred pred) {
  while (!pred(sim.configuration())) sim.step();
  return sim.time();
}

// Applies every event with time <= horizon; the first later event stays
// pending, so the trajectory is independent of the query grid.
template <class Sim>
void run_until_time(Sim& sim, double horizon) {
  while (sim.peek_next_time() <= horizon) sim.step();
}

struct ConsensusResult {
  double t = 0.0;
  WordId word = -1;
  std::int64_t events = 0;
};

template <class Sim>
ConsensusResult run_until_consensus(Sim& sim) {
  ConsensusResult r;
  while (!sim.configuration().is_consensus()) {
    sim.step();
    ++r.events;
  }
  r.t = sim.time();
  r.word = sim.configuration().consensus_word();
  return r;
}

}  // namespace nglab
