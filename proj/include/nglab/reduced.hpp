#pragma once
// Three-state reduction of the two-word regime: counts (X, Y, Z) of agents
// holding {A}, {B}, {A,B}. Eight reactions; in exact mode the denominator is
// n-1 and the chain is the lumped image of the full model restricted to two
// words, in normalized mode the denominator is n (the large-n rates whose
// drifts match the limit ODE). Also carries the closed-form drifts of the
// asymmetry and overlap coordinates used by the concentration checks.

#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <stdexcept>

#include "nglab/model.hpp"
#include "nglab/observables.hpp"
#include "nglab/rng.hpp"

namespace nglab {

enum class RateMode { kExact, kNormalized };

struct ReducedState {
  std::int64_t x = 0;  // agents holding only the first word
  std::int64_t y = 0;  // agents holding only the second word
  std::int64_t z = 0;  // agents holding both

  std::int64_t n() const { return x + y + z; }
  bool operator==(const ReducedState&) const = default;
};

struct ReducedJump {
  int dx, dy, dz;
};

// Reactions, in a fixed order:
//  0: both-holder speaks B to an A-holder            (A -> AB)
//  1: agreement on A between an A-holder and a both-holder
//  2: both-holder speaks A to a B-holder             (B -> AB)
//  3: agreement on B between a B-holder and a both-holder
//  4: agreement on A between two both-holders
//  5: agreement on B between two both-holders
//  6: A-holder speaks A to a B-holder                (B -> AB)
//  7: B-holder speaks B to an A-holder               (A -> AB)
inline constexpr std::array<ReducedJump, 8> kReducedJumps{{{-1, 0, 1},
                                                           {1, 0, -1},
                                                           {0, -1, 1},
                                                           {0, 1, -1},
                                                           {2, 0, -2},
                                                           {0, 2, -2},
                                                           {0, -1, 1},
                                                           {-1, 0, 1}}};

inline std::array<double, 8> reduced_rates(const ReducedState& s,
                                           RateMode mode) {
  assert(s.x >= 0 && s.y >= 0 && s.z >= 0 && s.n() >= 2);
  const auto x = static_cast<double>(s.x);
  const auto y = static_cast<double>(s.y);
  const auto z = static_cast<double>(s.z);
  const double d = mode == RateMode::kExact ? static_cast<double>(s.n() - 1)
                                            : static_cast<double>(s.n());
  return {x * z / (2.0 * d),       3.0 * x * z / (2.0 * d),
          y * z / (2.0 * d),       3.0 * y * z / (2.0 * d),
          z * (z - 1.0) / (2.0 * d), z * (z - 1.0) / (2.0 * d),
          x * y / d,               x * y / d};
}

// Normalized coordinates.
inline double u_of(const ReducedState& s) {
  return static_cast<double>(std::llabs(s.x - s.y)) /
         static_cast<double>(s.n());
}
inline double z_of(const ReducedState& s) {
  return static_cast<double>(s.z) / static_cast<double>(s.n());
}
inline double overlap_root() { return std::sqrt(5.0) - 2.0; }
inline double b_of(const ReducedState& s) { return z_of(s) - overlap_root(); }

// Generator applied to a scalar functional f at state s: sum_r q_r (f(s+r)-f(s)).
template <class F>
double generator_drift(const ReducedState& s, RateMode mode, F f) {
  const auto q = reduced_rates(s, mode);
  const double base = f(s);
  double drift = 0.0;
  for (std::size_t r = 0; r < 8; ++r) {
    const ReducedState next{s.x + kReducedJumps[r].dx,
                            s.y + kReducedJumps[r].dy,
                            s.z + kReducedJumps[r].dz};
    drift += q[r] * (f(next) - base);
  }
  return drift;
}

// sum_r q_r (f(s+r)-f(s))^2, the predictable quadratic variation rate of f.
template <class F>
double generator_diffusivity(const ReducedState& s, RateMode mode, F f) {
  const auto q = reduced_rates(s, mode);
  const double base = f(s);
  double v = 0.0;
  for (std::size_t r = 0; r < 8; ++r) {
    const ReducedState next{s.x + kReducedJumps[r].dx,
                            s.y + kReducedJumps[r].dy,
                            s.z + kReducedJumps[r].dz};
    const double df = f(next) - base;
    v += q[r] * df * df;
  }
  return v;
}

// Closed-form drift of u = |X-Y|/n under normalized rates. Piecewise in the
// integer gap: reactions through the reflection at X = Y add mass.
inline double drift_asymmetry(const ReducedState& s) {
  const double u = u_of(s);
  const double z = z_of(s);
  const double n = static_cast<double>(s.n());
  const auto gap = std::llabs(s.x - s.y);
  if (gap >= 2) return u * z;
  if (gap == 1) return u * z + z * (z - 1.0 / n);
  const double xn = static_cast<double>(s.x) / n;
  const double yn = static_cast<double>(s.y) / n;
  return 2.0 * z + 2.0 * xn * yn - 2.0 * z / n;
}

// Closed-form drift of z = Z/n under normalized rates; exact at every state.
inline double drift_overlap(const ReducedState& s) {
  const double u = u_of(s);
  const double z = z_of(s);
  const double n = static_cast<double>(s.n());
  return 0.5 * (1.0 - u * u - 4.0 * z - z * z) + 2.0 * z / n;
}

// Same quantity factored around the stable overlap root.
inline double drift_overlap_factored(const ReducedState& s) {
  const double u = u_of(s);
  const double z = z_of(s);
  const double n = static_cast<double>(s.n());
  const double b = z - overlap_root();
  return 0.5 * (-b * (z + 2.0 + std::sqrt(5.0)) - u * u) + 2.0 * z / n;
}

// Gillespie simulation of the reduced chain with the same lazy pending-event
// contract as the particle engines.
class ReducedChain {
 public:
  ReducedChain(ReducedState init, RateMode mode, Rng rng)
      : s_(init), mode_(mode), rng_(rng) {
    if (init.x < 0 || init.y < 0 || init.z < 0 || init.n() < 2) {
      throw std::invalid_argument("reduced chain: invalid initial counts");
    }
  }

  double time() const { return t_; }
  const ReducedState& state() const { return s_; }
  RateMode mode() const { return mode_; }

  bool absorbed() const {
    return s_.z == 0 && (s_.x == 0 || s_.y == 0);
  }

  double total_rate() const {
    const auto q = reduced_rates(s_, mode_);
    double total = 0.0;
    for (const double v : q) total += v;
    return total;
  }

  double peek_next_time() {
    if (!has_pending_) {
      const double total = total_rate();
      if (total <= 0.0) {
        pending_t_ = std::numeric_limits<double>::infinity();
      } else {
        double gap;
        do {
          gap = rng_.exponential(total);
        } while (gap <= 0.0);
        pending_t_ = t_ + gap;
      }
      has_pending_ = true;
    }
    return pending_t_;
  }

  // Fires one reaction and returns its index; must not be called when
  // absorbed.
  int step() {
    peek_next_time();
    assert(!absorbed());
    const auto q = reduced_rates(s_, mode_);
    double total = 0.0;
    for (const double v : q) total += v;
    const double target = rng_.uniform01() * total;
    double acc = 0.0;
    int pick = 7;
    for (int r = 0; r < 8; ++r) {
      acc += q[r];
      if (target < acc) {
        pick = r;
        break;
      }
    }
    s_.x += kReducedJumps[pick].dx;
    s_.y += kReducedJumps[pick].dy;
    s_.z += kReducedJumps[pick].dz;
    t_ = pending_t_;
    has_pending_ = false;
    return pick;
  }

 private:
  ReducedState s_;
  RateMode mode_;
  Rng rng_;
  double t_ = 0.0;
  double pending_t_ = 0.0;
  bool has_pending_ = false;
};

struct ReducedConsensusResult {
  bool reached = false;
  double t_c = 0.0;
  int winner = -1;  // 0 first word wins, 1 second word wins
  std::int64_t events = 0;
};

inline ReducedConsensusResult run_to_consensus(ReducedChain& chain,
                                               std::int64_t max_events = -1) {
  ReducedConsensusResult r;
  while (!chain.absorbed()) {
    if (max_events >= 0 && r.events >= max_events) return r;
    chain.step();
    ++r.events;
  }
  r.reached = true;
  r.t_c = chain.time();
  r.winner = chain.state().x > 0 ? 0 : 1;
  return r;
}

// Reads (X, Y, Z) off a full-model configuration in a two-word state: no mute
// agents, at most two distinct words alive (ordered by word id).
inline ReducedState project_to_reduced(const Configuration& cfg,
                                       const Observables& obs) {
  if (cfg.mute_count() != 0) {
    throw std::invalid_argument("projection: configuration has mute agents");
  }
  WordId first = -1, second = -1;
  for (WordId w = 0; w < cfg.n(); ++w) {
    if (!obs.word_alive(w)) continue;
    if (first < 0) {
      first = w;
    } else if (second < 0) {
      second = w;
    } else {
      throw std::invalid_argument("projection: more than two words alive");
    }
  }
  if (first < 0) throw std::invalid_argument("projection: no words alive");
  ReducedState s;
  for (AgentId a = 0; a < cfg.n(); ++a) {
    const auto& v = cfg.vocabulary(a);
    if (v.size() == 2) {
      ++s.z;
    } else if (v[0] == first) {
      ++s.x;
    } else {
      ++s.y;
    }
  }
  return s;
}

}  // namespace nglab
