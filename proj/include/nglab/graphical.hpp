#pragma once
// Alternative engine that realizes the randomness edge by edge: every directed
// pair (speaker, listener) carries its own Poisson clock of rate 1/(n-1), and
// every clock tick carries a uniform word-choice mark. Superposing the clocks
// reproduces the aggregate-clock law exactly, but here the noise is addressed
// by edge, which makes replicate-for-replicate comparisons and couplings
// possible. Keeps one RNG stream per directed edge, so n is capped.

#include <cstdint>
#include <queue>
#include <stdexcept>
#include <vector>

#include "nglab/model.hpp"
#include "nglab/rng.hpp"

namespace nglab {

class GraphicalSim {
 public:
  static constexpr int kMaxAgents = 64;

  GraphicalSim(Configuration init, std::uint64_t seed, std::uint64_t replicate)
      : cfg_(std::move(init)), t_(0.0) {
    const int n = cfg_.n();
    if (n > kMaxAgents) {
      throw std::invalid_argument(
          "graphical engine: n > 64 needs n(n-1) clock streams, use the "
          "aggregate-clock engine instead");
    }
    const auto edges = static_cast<std::uint32_t>(n) *
                       static_cast<std::uint32_t>(n - 1);
    rngs_.reserve(edges);
    for (std::uint32_t e = 0; e < edges; ++e) {
      rngs_.emplace_back(seed, edge_stream(replicate, e));
      push_next_(e, 0.0);
    }
  }

  double time() const { return t_; }
  const Configuration& configuration() const { return cfg_; }
  void attach(SimObserver* obs) { observers_.push_back(obs); }

  double peek_next_time() { return heap_.top().t; }

  InteractionEvent step() {
    const Arrival a = heap_.top();
    heap_.pop();
    const int n = cfg_.n();
    const auto speaker = static_cast<AgentId>(a.edge / (n - 1));
    const auto r = static_cast<AgentId>(a.edge % (n - 1));
    const AgentId listener = r + (r >= speaker ? 1 : 0);

    speaker_before_ = cfg_.vocabulary(speaker);
    listener_before_ = cfg_.vocabulary(listener);
    const auto ev = cfg_.apply(speaker, listener, a.u, a.t);
    t_ = a.t;
    push_next_(a.edge, a.t);
    for (auto* obs : observers_) {
      obs->on_event(ev, speaker_before_, listener_before_, cfg_);
    }
    return ev;
  }

 private:
  struct Arrival {
    double t;
    std::uint32_t edge;
    double u;
    bool operator>(const Arrival& o) const {
      return t != o.t ? t > o.t : edge > o.edge;
    }
  };

  void push_next_(std::uint32_t edge, double from) {
    auto& rng = rngs_[edge];
    const double rate = 1.0 / static_cast<double>(cfg_.n() - 1);
    double gap;
    do {
      gap = rng.exponential(rate);
    } while (gap <= 0.0);  // per-edge times strictly increase
    heap_.push(Arrival{from + gap, edge, rng.uniform01()});
  }

  Configuration cfg_;
  double t_;
  std::vector<Rng> rngs_;
  std::priority_queue<Arrival, std::vector<Arrival>, std::greater<Arrival>>
      heap_;
  std::vector<SimObserver*> observers_;
  Vocabulary speaker_before_, listener_before_;
};

}  // namespace nglab
