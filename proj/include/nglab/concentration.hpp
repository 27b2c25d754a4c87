#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nglab/model.hpp"
#include "nglab/observables.hpp"
#include "nglab/reduced.hpp"
#include "nglab/rng.hpp"
#include "nglab/stats.hpp"

namespace nglab {

// One empirical-versus-bound comparison. `empirical` is either a Monte Carlo
// frequency (trials > 0) or an exactly computed quantity (trials == 0).
// A cell with bound >= 1 is vacuous and passes automatically.
struct CheckCell {
  std::string name;
  std::string params;
  double empirical = 0.0;
  double bound = 0.0;
  double se = 0.0;
  bool pass = false;
  std::int64_t trials = 0;
  std::int64_t hits = 0;
};

inline CheckCell make_frequency_cell(std::string name, std::string params,
                                     std::int64_t trials, std::int64_t hits,
                                     double bound, double extra_bias = 0.0) {
  if (trials <= 0) throw std::invalid_argument("frequency cell needs trials > 0");
  CheckCell cell;
  cell.name = std::move(name);
  cell.params = std::move(params);
  cell.trials = trials;
  cell.hits = hits;
  cell.empirical = static_cast<double>(hits) / static_cast<double>(trials);
  cell.bound = bound;
  cell.se = std::sqrt(cell.empirical * (1.0 - cell.empirical) /
                      static_cast<double>(trials));
  cell.pass = bound >= 1.0 ||
              cell.empirical + extra_bias <= bound + 3.0 * cell.se;
  return cell;
}

inline CheckCell make_exact_cell(std::string name, std::string params,
                                 double value, double bound) {
  CheckCell cell;
  cell.name = std::move(name);
  cell.params = std::move(params);
  cell.empirical = value;
  cell.bound = bound;
  // Relative slack covers quadrature error in equality cases; real violations
  // of the one-sided bounds are orders of magnitude larger.
  cell.pass = value <= bound * (1.0 + 1e-9) + 1e-300;
  return cell;
}

inline bool all_pass(const std::vector<CheckCell>& cells) {
  return std::all_of(cells.begin(), cells.end(),
                     [](const CheckCell& c) { return c.pass; });
}

// Running decomposition of a pure-jump process f(t) into martingale part and
// predictable quadratic variation. Between events the drift mu and the
// variance rate sig2 are constant, so advancing in one piece is exact:
//   deviation = sum of jumps - integral of mu dt   (the martingale part)
//   variance  = integral of sig2 dt.
// Both are piecewise linear in t between jumps, so any threshold of the form
// deviation >= lambda * variance + a attains its supremum at an interval
// endpoint; checking just before and just after every jump is exhaustive.
class CompensatorTracker {
 public:
  void advance(double dt, double mu, double sig2) {
    assert(dt >= 0.0);
    deviation_ -= mu * dt;
    variance_ += sig2 * dt;
    elapsed_ += dt;
  }

  void jump(double df) { deviation_ += df; }

  double deviation() const { return deviation_; }
  double variance() const { return variance_; }
  double elapsed() const { return elapsed_; }

 private:
  double deviation_ = 0.0;
  double variance_ = 0.0;
  double elapsed_ = 0.0;
};

namespace detail {

// Threshold bookkeeping shared by the supermartingale checks: for each level a
// record whether +deviation or -deviation ever reached lambda * variance + a.
struct DeviationHits {
  explicit DeviationHits(std::size_t levels)
      : plus(levels, 0), minus(levels, 0) {}

  void check(const CompensatorTracker& tracker, double lambda,
             const std::vector<double>& as) {
    const double dev = tracker.deviation();
    const double threshold_base = lambda * tracker.variance();
    for (std::size_t i = 0; i < as.size(); ++i) {
      if (dev >= threshold_base + as[i]) plus[i] = 1;
      if (-dev >= threshold_base + as[i]) minus[i] = 1;
    }
  }

  std::vector<char> plus;
  std::vector<char> minus;
};

inline void require_supermartingale_scale(double lambda, double jump_bound) {
  if (!(lambda > 0.0) || !(lambda * jump_bound <= 0.5)) {
    throw std::invalid_argument(
        "exponential supermartingale check needs 0 < lambda * jump <= 1/2");
  }
}

inline std::string format_params(const std::string& text) { return text; }

}  // namespace detail

// Empirical check of the exponential concentration bound
//   P(exists t <= horizon : +-M_t >= lambda * V_t + a) <= exp(-lambda * a)
// for the compensated counting process M_t = N_t - rate * t of a unit-jump
// Poisson process, with V_t = rate * t. Requires lambda * 1 <= 1/2. Emits one
// cell per level and sign.
inline std::vector<CheckCell> azuma_poisson_cells(double rate, double lambda,
                                                  const std::vector<double>& as,
                                                  double horizon,
                                                  std::int64_t reps,
                                                  std::uint64_t seed) {
  detail::require_supermartingale_scale(lambda, 1.0);
  if (!(rate > 0.0) || !(horizon > 0.0) || reps <= 0 || as.empty()) {
    throw std::invalid_argument("bad azuma_poisson_cells arguments");
  }
  for (double a : as) {
    if (!(a > 0.0)) throw std::invalid_argument("levels must be positive");
  }

  std::vector<std::int64_t> hits_plus(as.size(), 0), hits_minus(as.size(), 0);
  for (std::int64_t rep = 0; rep < reps; ++rep) {
    Rng rng(seed, static_cast<std::uint64_t>(rep));
    CompensatorTracker tracker;
    detail::DeviationHits hits(as.size());
    double t = 0.0;
    for (;;) {
      const double gap = rng.exponential(rate);
      if (t + gap > horizon) {
        tracker.advance(horizon - t, rate, rate);
        hits.check(tracker, lambda, as);
        break;
      }
      tracker.advance(gap, rate, rate);
      hits.check(tracker, lambda, as);
      tracker.jump(1.0);
      hits.check(tracker, lambda, as);
      t += gap;
    }
    for (std::size_t i = 0; i < as.size(); ++i) {
      hits_plus[i] += hits.plus[i];
      hits_minus[i] += hits.minus[i];
    }
  }

  std::vector<CheckCell> cells;
  for (std::size_t i = 0; i < as.size(); ++i) {
    std::ostringstream params;
    params << "rate=" << rate << " lambda=" << lambda << " a=" << as[i]
           << " horizon=" << horizon;
    const double bound = std::exp(-lambda * as[i]);
    cells.push_back(make_frequency_cell("poisson-count-upper", params.str(),
                                        reps, hits_plus[i], bound));
    cells.push_back(make_frequency_cell("poisson-count-lower", params.str(),
                                        reps, hits_minus[i], bound));
  }
  return cells;
}

// Same bound for the vocabulary-asymmetry martingale of the reduced two-word
// chain started from the balanced mute-free state (n/2, n/2, 0). Jumps of
// |X - Y| / n are at most 2/n, so lambda up to n/4 is admissible.
inline std::vector<CheckCell> azuma_reduced_cells(std::int64_t n, double lambda,
                                                  const std::vector<double>& as,
                                                  double horizon,
                                                  std::int64_t reps,
                                                  std::uint64_t seed) {
  if (n < 4 || n % 2 != 0) {
    throw std::invalid_argument("need even n >= 4 for the balanced start");
  }
  detail::require_supermartingale_scale(lambda, 2.0 / static_cast<double>(n));
  if (!(horizon > 0.0) || reps <= 0 || as.empty()) {
    throw std::invalid_argument("bad azuma_reduced_cells arguments");
  }
  for (double a : as) {
    if (!(a > 0.0)) throw std::invalid_argument("levels must be positive");
  }

  const auto asymmetry = [](const ReducedState& s) { return u_of(s); };
  std::vector<std::int64_t> hits_plus(as.size(), 0), hits_minus(as.size(), 0);
  for (std::int64_t rep = 0; rep < reps; ++rep) {
    Rng rng(seed, static_cast<std::uint64_t>(rep));
    ReducedChain chain(ReducedState{n / 2, n / 2, 0}, RateMode::kNormalized,
                       std::move(rng));
    CompensatorTracker tracker;
    detail::DeviationHits hits(as.size());
    for (;;) {
      const ReducedState before = chain.state();
      const double mu = drift_asymmetry(before);
      const double sig2 =
          generator_diffusivity(before, RateMode::kNormalized, asymmetry);
      const double next = chain.peek_next_time();
      if (next > horizon) {
        tracker.advance(horizon - chain.time(), mu, sig2);
        hits.check(tracker, lambda, as);
        break;
      }
      tracker.advance(next - chain.time(), mu, sig2);
      hits.check(tracker, lambda, as);
      chain.step();
      tracker.jump(u_of(chain.state()) - u_of(before));
      hits.check(tracker, lambda, as);
    }
    for (std::size_t i = 0; i < as.size(); ++i) {
      hits_plus[i] += hits.plus[i];
      hits_minus[i] += hits.minus[i];
    }
  }

  std::vector<CheckCell> cells;
  for (std::size_t i = 0; i < as.size(); ++i) {
    std::ostringstream params;
    params << "n=" << n << " lambda=" << lambda << " a=" << as[i]
           << " horizon=" << horizon;
    const double bound = std::exp(-lambda * as[i]);
    cells.push_back(make_frequency_cell("asymmetry-upper", params.str(), reps,
                                        hits_plus[i], bound));
    cells.push_back(make_frequency_cell("asymmetry-lower", params.str(), reps,
                                        hits_minus[i], bound));
  }
  return cells;
}

// Tail bounds for a Poisson variable with mean lam, valid for 0 < x <= sqrt(lam):
//   P(X < lam - x sqrt(lam)) <= exp(-x^2 / 2)
//   P(X > lam + x sqrt(lam)) <= exp(-x^2 / 3)
// Exact cells evaluate the left side through the gamma function; Monte Carlo
// cells re-estimate it from draws when mc_reps > 0.
inline std::vector<CheckCell> poisson_tail_cells(double lam,
                                                 const std::vector<double>& xs,
                                                 std::int64_t mc_reps,
                                                 std::uint64_t seed) {
  if (!(lam > 0.0)) throw std::invalid_argument("mean must be positive");
  const double root = std::sqrt(lam);
  for (double x : xs) {
    if (!(x > 0.0) || !(x <= root)) {
      throw std::invalid_argument("need 0 < x <= sqrt(mean)");
    }
  }

  std::vector<CheckCell> cells;
  for (double x : xs) {
    const double lo = lam - x * root;
    const double hi = lam + x * root;
    std::ostringstream params;
    params << "mean=" << lam << " x=" << x;

    // P(X < lo) = P(X <= ceil(lo) - 1).
    const auto k_lo = static_cast<std::int64_t>(std::ceil(lo)) - 1;
    const double exact_lo = k_lo < 0 ? 0.0 : poisson_cdf(k_lo, lam);
    cells.push_back(make_exact_cell("poisson-tail-lower-exact", params.str(),
                                    exact_lo, std::exp(-0.5 * x * x)));

    // P(X > hi) = 1 - P(X <= floor(hi)).
    const double exact_hi =
        1.0 - poisson_cdf(static_cast<std::int64_t>(std::floor(hi)), lam);
    cells.push_back(make_exact_cell("poisson-tail-upper-exact", params.str(),
                                    exact_hi, std::exp(-x * x / 3.0)));
  }

  if (mc_reps > 0) {
    std::vector<std::int64_t> below(xs.size(), 0), above(xs.size(), 0);
    Rng rng(seed, 0);
    for (std::int64_t rep = 0; rep < mc_reps; ++rep) {
      const double draw = static_cast<double>(rng.poisson(lam));
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (draw < lam - xs[i] * root) ++below[i];
        if (draw > lam + xs[i] * root) ++above[i];
      }
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
      std::ostringstream params;
      params << "mean=" << lam << " x=" << xs[i];
      cells.push_back(make_frequency_cell("poisson-tail-lower-mc", params.str(),
                                          mc_reps, below[i],
                                          std::exp(-0.5 * xs[i] * xs[i])));
      cells.push_back(make_frequency_cell("poisson-tail-upper-mc", params.str(),
                                          mc_reps, above[i],
                                          std::exp(-xs[i] * xs[i] / 3.0)));
    }
  }
  return cells;
}

namespace detail {

// Solves m + kappa * m^p = target for m >= 0 by bisection; the left side is
// strictly increasing, so the root is unique.
inline double invert_upper_envelope(double target, double kappa, double p) {
  if (target <= 0.0) return 0.0;
  double lo = 0.0, hi = target;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid + kappa * std::pow(mid, p) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Last-exit-time bounds for a rate-lam Poisson path around its mean: with
// p = 1/2 + alpha and envelope lam t +- kappa (lam t)^p, the last time the
// path sits above (respectively below) the envelope satisfies
//   P(last time above > t) <= 6 t^(1-2 alpha) exp(-kappa^2 (lam t)^(2 alpha) / 3)
//   P(last time below > t) <= 4 t^(1-2 alpha) exp(-kappa^2 (lam t)^(2 alpha) / 2)
// for lam >= 1 and t^(2 alpha) >= 6. Paths run to horizon_factor times the
// largest requested t; exits later than that are missed, so the bound value at
// the horizon is added to the empirical side as truncation bias.
inline std::vector<CheckCell> last_passage_cells(double lam, double alpha,
                                                 double kappa,
                                                 const std::vector<double>& ts,
                                                 std::int64_t reps,
                                                 std::uint64_t seed,
                                                 double horizon_factor = 4.0) {
  if (!(lam >= 1.0)) throw std::invalid_argument("rate must be at least 1");
  if (!(alpha > 0.0) || !(alpha <= 0.5)) {
    throw std::invalid_argument("exponent must lie in (0, 1/2]");
  }
  if (!(kappa > 0.0) || ts.empty() || reps <= 0 || !(horizon_factor > 1.0)) {
    throw std::invalid_argument("bad last_passage_cells arguments");
  }
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!(std::pow(ts[i], 2.0 * alpha) >= 6.0)) {
      throw std::invalid_argument("grid times must satisfy t^(2 alpha) >= 6");
    }
    if (i > 0 && !(ts[i] > ts[i - 1])) {
      throw std::invalid_argument("grid times must increase");
    }
  }

  const double p = 0.5 + alpha;
  const double horizon = horizon_factor * ts.back();
  const auto upper_curve = [&](double t) {
    return lam * t + kappa * std::pow(lam * t, p);
  };
  const auto lower_curve = [&](double t) {
    return lam * t - kappa * std::pow(lam * t, p);
  };

  std::vector<std::int64_t> hits_above(ts.size(), 0), hits_below(ts.size(), 0);
  for (std::int64_t rep = 0; rep < reps; ++rep) {
    Rng rng(seed, static_cast<std::uint64_t>(rep));
    double t = 0.0;
    std::int64_t count = 0;
    double last_below = 0.0;
    std::int64_t best_above_count = -1;
    for (;;) {
      const double s = t + rng.exponential(lam);
      if (s > horizon) {
        // Still below the envelope at the horizon: treat the exit as open.
        if (lower_curve(horizon) > static_cast<double>(count)) {
          last_below = horizon;
        }
        break;
      }
      // The count was constant since the previous arrival, so the path was
      // below the (increasing) lower envelope just before s if and only if
      // the envelope exceeds the pre-jump count at s.
      if (lower_curve(s) > static_cast<double>(count)) last_below = s;
      ++count;
      // Counts only grow, so the latest qualifying count gives the latest
      // crossing of the upper envelope; invert once per path at the end.
      if (static_cast<double>(count) > upper_curve(s)) best_above_count = count;
      t = s;
    }
    double last_above = 0.0;
    if (best_above_count >= 0) {
      const double m = detail::invert_upper_envelope(
          static_cast<double>(best_above_count), kappa, p);
      last_above = m / lam;
    }
    for (std::size_t i = 0; i < ts.size(); ++i) {
      if (last_above > ts[i]) ++hits_above[i];
      if (last_below > ts[i]) ++hits_below[i];
    }
  }

  const auto bound_above = [&](double t) {
    return 6.0 * std::pow(t, 1.0 - 2.0 * alpha) *
           std::exp(-kappa * kappa * std::pow(lam * t, 2.0 * alpha) / 3.0);
  };
  const auto bound_below = [&](double t) {
    return 4.0 * std::pow(t, 1.0 - 2.0 * alpha) *
           std::exp(-kappa * kappa * std::pow(lam * t, 2.0 * alpha) / 2.0);
  };

  std::vector<CheckCell> cells;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    std::ostringstream params;
    params << "rate=" << lam << " alpha=" << alpha << " kappa=" << kappa
           << " t=" << ts[i] << " horizon=" << horizon;
    cells.push_back(make_frequency_cell("last-exit-above", params.str(), reps,
                                        hits_above[i], bound_above(ts[i]),
                                        bound_above(horizon)));
    cells.push_back(make_frequency_cell("last-exit-below", params.str(), reps,
                                        hits_below[i], bound_below(ts[i]),
                                        bound_below(horizon)));
  }
  return cells;
}

// Deterministic inequality between a shifted reciprocal and its expansion:
//   1 / (1 + lam - lam^(1/2 + alpha) / 2) <= 1/(1 + lam) + (1 + lam)^(alpha - 3/2)
// for parameters keeping the left denominator positive.
inline CheckCell recip_bound_cell(double lam, double alpha) {
  const double denom = 1.0 + lam - 0.5 * std::pow(lam, 0.5 + alpha);
  if (!(denom > 0.0)) {
    throw std::invalid_argument("reciprocal bound needs a positive denominator");
  }
  const double lhs = 1.0 / denom;
  const double rhs = 1.0 / (1.0 + lam) + std::pow(1.0 + lam, alpha - 1.5);
  std::ostringstream params;
  params << "lam=" << lam << " alpha=" << alpha;
  return make_exact_cell("reciprocal-expansion", params.str(), lhs, rhs);
}

namespace detail {

inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double fa, double fm, double fb,
                               double whole, double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0) throw std::runtime_error("quadrature failed to converge");
  if (std::fabs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double eps) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, eps, 60);
}

}  // namespace detail

// Closed-form upper bound on the incomplete integral of t^a exp(-c t^beta).
// Since -d/dt [t^(1+a-beta) exp(-c t^beta)]
//        = (beta c - (1+a-beta) t^-beta) t^a exp(-c t^beta),
// bounding the bracket below by its infimum over [x, inf) gives
//   int_x^inf t^a exp(-c t^beta) dt
//     <= x^(1 + a - beta) exp(-c x^beta)
//          / (beta c - max(1 + a - beta, 0) x^(-beta)),
// valid when that denominator is positive. (For 1 + a - beta < 0 the bracket
// decreases toward beta c, so the infimum drops the second term.)
inline double exp_tail_bound(double a, double beta, double c, double x) {
  if (!(beta > 0.0) || !(c > 0.0) || !(x > 0.0)) {
    throw std::invalid_argument("need positive beta, c, x");
  }
  const double denom =
      beta * c - std::max(1.0 + a - beta, 0.0) * std::pow(x, -beta);
  if (!(denom > 0.0)) {
    throw std::invalid_argument(
        "tail bound needs beta c > (1 + a - beta) x^-beta");
  }
  return std::pow(x, 1.0 + a - beta) * std::exp(-c * std::pow(x, beta)) / denom;
}

// Numerical value of the same integral by adaptive Simpson quadrature. The
// integrand is rescaled by exp(c x^beta) so the working magnitudes stay near
// one; the cutoff adds 60 nats of decay, far below the quadrature tolerance.
inline double exp_tail_integral(double a, double beta, double c, double x) {
  if (!(beta > 0.0) || !(c > 0.0) || !(x > 0.0)) {
    throw std::invalid_argument("need positive beta, c, x");
  }
  const double shift = c * std::pow(x, beta);
  const auto scaled = [&](double t) {
    return std::pow(t, a) * std::exp(shift - c * std::pow(t, beta));
  };
  const double cutoff = std::pow(std::pow(x, beta) + 60.0 / c, 1.0 / beta);
  const double scale_guess = std::max(1.0, std::pow(x, a)) * (cutoff - x);
  const double value =
      detail::integrate(scaled, x, cutoff, 1e-13 * scale_guess);
  return value * std::exp(-shift);
}

inline CheckCell exp_tail_cell(double a, double beta, double c, double x) {
  std::ostringstream params;
  params << "a=" << a << " beta=" << beta << " c=" << c << " x=" << x;
  return make_exact_cell("exponential-tail-integral", params.str(),
                         exp_tail_integral(a, beta, c, x),
                         exp_tail_bound(a, beta, c, x));
}

// Branching population with clock-damped fertility. The founder gives birth at
// constant rate b. Every later individual i carries an independent rate-r
// Poisson clock running from global time zero; its value at the arrival time
// t_i is drawn as Poisson(r * t_i) and it keeps ticking afterwards. The birth
// rate of the whole population is
//   b + sum over non-founders of 1 / (1 + clock_i(t)).
// The frozen variant keeps each contribution fixed at its arrival value
// 1 / (1 + clock_i(t_i)), which can only overestimate the live rate.
struct BranchingParams {
  double b = 2.0;
  double r = 1.0;
};

struct BranchingOptions {
  bool frozen = false;
  std::int64_t cap = 2'000'000;
};

// Population size at each grid time (grid strictly increasing, positive).
inline std::vector<std::int64_t> branching_path(const BranchingParams& params,
                                                const std::vector<double>& grid,
                                                Rng& rng,
                                                const BranchingOptions& opts = {}) {
  if (!(params.b >= 0.0) || !(params.r > 0.0)) {
    throw std::invalid_argument("need b >= 0 and r > 0");
  }
  if (grid.empty()) throw std::invalid_argument("empty sampling grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || (i > 0 && !(grid[i] > grid[i - 1]))) {
      throw std::invalid_argument("grid times must be positive and increasing");
    }
  }

  std::vector<std::int64_t> clocks;  // non-founder clock values
  double birth_rate = params.b;
  double t = 0.0;
  std::vector<std::int64_t> out;
  out.reserve(grid.size());
  std::size_t next_grid = 0;
  while (next_grid < grid.size()) {
    const double tick_rate =
        opts.frozen ? 0.0 : params.r * static_cast<double>(clocks.size());
    const double total = birth_rate + tick_rate;
    const double gap = rng.exponential(total);
    while (next_grid < grid.size() && t + gap > grid[next_grid]) {
      out.push_back(static_cast<std::int64_t>(clocks.size()) + 1);
      ++next_grid;
    }
    if (next_grid >= grid.size()) break;
    t += gap;
    const double pick = rng.uniform01() * total;
    if (pick < birth_rate) {
      const std::int64_t clock = rng.poisson(params.r * t);
      clocks.push_back(clock);
      birth_rate += 1.0 / (1.0 + static_cast<double>(clock));
      if (static_cast<std::int64_t>(clocks.size()) >= opts.cap) {
        throw std::runtime_error("branching population exceeded cap");
      }
    } else {
      const std::size_t idx = std::min(
          clocks.size() - 1,
          static_cast<std::size_t>((pick - birth_rate) / params.r));
      birth_rate += 1.0 / (2.0 + static_cast<double>(clocks[idx])) -
                    1.0 / (1.0 + static_cast<double>(clocks[idx]));
      ++clocks[idx];
    }
  }
  return out;
}

struct BranchingPairPath {
  std::vector<std::int64_t> live;    // clock-damped population
  std::vector<std::int64_t> frozen;  // arrival-frozen majorant
};

// Couples the live process to its frozen majorant on one probability space:
// births come from a master stream at the frozen rate, every point counts for
// the frozen population, and each point is accepted into the live population
// with probability (live rate) / (frozen rate). Accepted individuals share
// their clock with the frozen copy, so both marginals are exact and the frozen
// count dominates pathwise.
inline BranchingPairPath branching_pair_path(const BranchingParams& params,
                                             const std::vector<double>& grid,
                                             Rng& rng,
                                             std::int64_t cap = 2'000'000) {
  if (!(params.b >= 0.0) || !(params.r > 0.0)) {
    throw std::invalid_argument("need b >= 0 and r > 0");
  }
  if (grid.empty()) throw std::invalid_argument("empty sampling grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || (i > 0 && !(grid[i] > grid[i - 1]))) {
      throw std::invalid_argument("grid times must be positive and increasing");
    }
  }

  std::vector<std::int64_t> live_clocks;
  double live_rate = params.b;
  double frozen_rate = params.b;
  std::int64_t frozen_count = 1;
  double t = 0.0;
  BranchingPairPath out;
  std::size_t next_grid = 0;
  while (next_grid < grid.size()) {
    const double tick_rate = params.r * static_cast<double>(live_clocks.size());
    const double total = frozen_rate + tick_rate;
    const double gap = rng.exponential(total);
    while (next_grid < grid.size() && t + gap > grid[next_grid]) {
      out.live.push_back(static_cast<std::int64_t>(live_clocks.size()) + 1);
      out.frozen.push_back(frozen_count);
      ++next_grid;
    }
    if (next_grid >= grid.size()) break;
    t += gap;
    const double pick = rng.uniform01() * total;
    if (pick < frozen_rate) {
      const std::int64_t clock = rng.poisson(params.r * t);
      const bool accept = rng.uniform01() * frozen_rate < live_rate;
      ++frozen_count;
      frozen_rate += 1.0 / (1.0 + static_cast<double>(clock));
      if (accept) {
        live_clocks.push_back(clock);
        live_rate += 1.0 / (1.0 + static_cast<double>(clock));
      }
      assert(live_rate <= frozen_rate + 1e-9);
      if (frozen_count > cap) {
        throw std::runtime_error("branching population exceeded cap");
      }
    } else {
      const std::size_t idx = std::min(
          live_clocks.size() - 1,
          static_cast<std::size_t>((pick - frozen_rate) / params.r));
      live_rate += 1.0 / (2.0 + static_cast<double>(live_clocks[idx])) -
                   1.0 / (1.0 + static_cast<double>(live_clocks[idx]));
      ++live_clocks[idx];
    }
  }
  return out;
}

// High-probability growth envelope for the branching population:
//   m * x * (x + log(1 + t)) * (1 + t)^(1/r).
inline double growth_envelope(double t, double r, double x = 16.0,
                              double m = 1.0) {
  return m * x * (x + std::log1p(t)) * std::pow(1.0 + t, 1.0 / r);
}

// Fraction of branching paths that ever poke above the growth envelope on the
// sampling grid.
inline CheckCell branching_envelope_cell(const BranchingParams& params,
                                         const std::vector<double>& grid,
                                         std::int64_t reps, std::uint64_t seed,
                                         double x = 16.0, double m = 1.0,
                                         double tolerated_fraction = 0.05) {
  std::int64_t exceed = 0;
  for (std::int64_t rep = 0; rep < reps; ++rep) {
    Rng rng(seed, static_cast<std::uint64_t>(rep));
    const auto path = branching_path(params, grid, rng);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (static_cast<double>(path[i]) >
          growth_envelope(grid[i], params.r, x, m)) {
        ++exceed;
        break;
      }
    }
  }
  std::ostringstream pstr;
  pstr << "b=" << params.b << " r=" << params.r << " x=" << x << " m=" << m
       << " t_max=" << grid.back();
  return make_frequency_cell("branching-envelope", pstr.str(), reps, exceed,
                             tolerated_fraction);
}

// Compares word-cluster sizes in the full model against the branching
// majorant with founder rate b and clock rate r = 1 - (b + log n) / (n - 1).
// For each grid time: pooled sizes of the surviving invented words across
// sim_reps full runs, versus branch_reps samples of the branching population.
// Two cells per time: the pooled median must not exceed the branching median,
// and the fraction of clusters above the branching 95 percent quantile must
// stay below 5 percent.
inline std::vector<CheckCell> domination_cells(std::int64_t n, double b,
                                               const std::vector<double>& ts,
                                               std::int64_t sim_reps,
                                               std::int64_t branch_reps,
                                               std::uint64_t seed) {
  if (n < 8) throw std::invalid_argument("population too small");
  if (ts.empty() || sim_reps <= 0 || branch_reps <= 0) {
    throw std::invalid_argument("bad domination_cells arguments");
  }
  BranchingParams params;
  params.b = b;
  params.r = 1.0 - (b + std::log(static_cast<double>(n))) /
                       static_cast<double>(n - 1);
  if (!(params.r > 0.0)) {
    throw std::invalid_argument("clock rate must stay positive; increase n");
  }

  // Branching samples per grid time.
  std::vector<std::vector<double>> branch_samples(ts.size());
  for (std::int64_t rep = 0; rep < branch_reps; ++rep) {
    Rng rng(seed, static_cast<std::uint64_t>(rep) + (1ull << 40));
    const auto path = branching_path(params, ts, rng);
    for (std::size_t i = 0; i < ts.size(); ++i) {
      branch_samples[i].push_back(static_cast<double>(path[i]));
    }
  }
  for (auto& col : branch_samples) std::sort(col.begin(), col.end());

  // Pooled cluster sizes from the full model.
  std::vector<std::vector<double>> cluster_samples(ts.size());
  for (std::int64_t rep = 0; rep < sim_reps; ++rep) {
    Rng rng(seed, static_cast<std::uint64_t>(rep));
    AgentClockSim sim =
        AgentClockSim::all_mute(static_cast<int>(n), std::move(rng));
    Observables obs(sim.configuration());
    sim.attach(&obs);
    for (std::size_t i = 0; i < ts.size(); ++i) {
      run_until_time(sim, ts[i]);
      for (std::int64_t w = 0; w < n; ++w) {
        const std::int64_t size = obs.cluster_size(static_cast<WordId>(w));
        if (size > 0) cluster_samples[i].push_back(static_cast<double>(size));
      }
    }
  }
  for (auto& col : cluster_samples) std::sort(col.begin(), col.end());

  std::vector<CheckCell> cells;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    std::ostringstream pstr;
    pstr << "n=" << n << " b=" << b << " r=" << params.r << " t=" << ts[i];
    if (cluster_samples[i].empty()) {
      throw std::runtime_error("no surviving words to compare");
    }
    const double cluster_median = median(cluster_samples[i]);
    const double branch_median = median(branch_samples[i]);
    CheckCell med;
    med.name = "domination-median";
    med.params = pstr.str();
    med.empirical = cluster_median;
    med.bound = branch_median;
    med.trials = static_cast<std::int64_t>(cluster_samples[i].size());
    med.pass = cluster_median <= branch_median;
    cells.push_back(med);

    const double q95 = quantile_sorted(branch_samples[i], 0.95);
    std::int64_t over = 0;
    for (double size : cluster_samples[i]) {
      if (size > q95) ++over;
    }
    cells.push_back(make_frequency_cell(
        "domination-q95", pstr.str(),
        static_cast<std::int64_t>(cluster_samples[i].size()), over, 0.05));
  }
  return cells;
}

}  // namespace nglab
