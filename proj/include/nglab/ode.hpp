#pragma once
// Deterministic limit dynamics of the two-word regime and a fixed-step RK4
// integrator with hard state-space checks. Out-of-range states throw instead
// of being clamped, so a bad right-hand side or step size cannot silently
// corrupt downstream comparisons.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace nglab {

struct InvariantViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OdeOptions {
  double h = 1e-3;
  double invariant_tol = 1e-9;
};

// Stable root of 1 - 4z - z^2: the overlap level the mixed dynamics hold.
inline double overlap_fixed_point() { return std::sqrt(5.0) - 2.0; }
// Single-word share at the symmetric equilibrium, (3 - sqrt 5)/2.
inline double equilibrium_share() { return (3.0 - std::sqrt(5.0)) / 2.0; }
// Decay-rate constant 1 + 1/(2 z*) governing the consensus time scale.
inline double consensus_rate_constant() {
  return 1.0 + 0.5 / overlap_fixed_point();
}

// d/dt (x, y) with z = 1 - x - y: x' = xz + z^2 - xy, symmetrically for y.
inline void rhs_two_word(const std::array<double, 2>& s,
                         std::array<double, 2>& ds) {
  const double z = 1.0 - s[0] - s[1];
  ds[0] = s[0] * z + z * z - s[0] * s[1];
  ds[1] = s[1] * z + z * z - s[0] * s[1];
}

// d/dt (u, z) in asymmetry/overlap coordinates.
inline void rhs_asymmetry(const std::array<double, 2>& s,
                          std::array<double, 2>& ds) {
  ds[0] = s[0] * s[1];
  ds[1] = 0.5 * (1.0 - s[0] * s[0] - 4.0 * s[1] - s[1] * s[1]);
}

// Overlap alone on the symmetric slice u = 0.
inline void rhs_overlap_only(const std::array<double, 1>& s,
                             std::array<double, 1>& ds) {
  ds[0] = 0.5 * (1.0 - 4.0 * s[0] - s[0] * s[0]);
}

inline void check_two_word(const std::array<double, 2>& s, double tol) {
  if (s[0] < -tol || s[1] < -tol || s[0] + s[1] > 1.0 + tol) {
    throw InvariantViolation("two-word state left the simplex");
  }
}

inline void check_asymmetry(const std::array<double, 2>& s, double tol) {
  if (s[0] < -tol || s[1] < -tol || s[0] + s[1] > 1.0 + tol) {
    throw InvariantViolation("asymmetry state left the simplex");
  }
}

inline void check_overlap_only(const std::array<double, 1>& s, double tol) {
  if (s[0] < -tol || s[0] > 1.0 + tol) {
    throw InvariantViolation("overlap left [0, 1]");
  }
}

// Classic RK4 with fixed step h; advance_to lands exactly on the target with
// one shorter final step. The invariant check runs on the initial state and
// after every step.
template <std::size_t N, class Rhs, class Check>
class OdeIntegrator {
 public:
  OdeIntegrator(Rhs rhs, Check check, std::array<double, N> y0,
                OdeOptions opts = {})
      : rhs_(rhs), check_(check), y_(y0), opts_(opts) {
    check_(y_, opts_.invariant_tol);
  }

  double time() const { return t_; }
  const std::array<double, N>& state() const { return y_; }

  void advance_to(double target) {
    if (target <= t_) return;
    while (target - t_ > opts_.h * (1.0 + 1e-12)) {
      step_(opts_.h);
      t_ += opts_.h;
    }
    const double rest = target - t_;
    if (rest > 1e-15) step_(rest);
    t_ = target;
  }

 private:
  void step_(double h) {
    std::array<double, N> k1, k2, k3, k4, tmp;
    rhs_(y_, k1);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y_[i] + 0.5 * h * k1[i];
    rhs_(tmp, k2);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y_[i] + 0.5 * h * k2[i];
    rhs_(tmp, k3);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y_[i] + h * k3[i];
    rhs_(tmp, k4);
    for (std::size_t i = 0; i < N; ++i) {
      y_[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    check_(y_, opts_.invariant_tol);
  }

  Rhs rhs_;
  Check check_;
  std::array<double, N> y_;
  OdeOptions opts_;
  double t_ = 0.0;
};

inline std::array<double, 2> two_word_at(double x0, double y0, double t,
                                         OdeOptions opts = {}) {
  OdeIntegrator<2, decltype(&rhs_two_word), decltype(&check_two_word)> ode(
      &rhs_two_word, &check_two_word, {x0, y0}, opts);
  ode.advance_to(t);
  return ode.state();
}

inline std::array<double, 2> asymmetry_at(double u0, double z0, double t,
                                          OdeOptions opts = {}) {
  OdeIntegrator<2, decltype(&rhs_asymmetry), decltype(&check_asymmetry)> ode(
      &rhs_asymmetry, &check_asymmetry, {u0, z0}, opts);
  ode.advance_to(t);
  return ode.state();
}

inline double overlap_at(double z0, double t, OdeOptions opts = {}) {
  OdeIntegrator<1, decltype(&rhs_overlap_only), decltype(&check_overlap_only)>
      ode(&rhs_overlap_only, &check_overlap_only, {z0}, opts);
  ode.advance_to(t);
  return ode.state()[0];
}

struct OdeSample {
  double t = 0.0;
  std::array<double, 2> y{};
};

// States at k * dt for k = 0..floor(t1/dt), asymmetry/overlap coordinates.
inline std::vector<OdeSample> asymmetry_trajectory(double u0, double z0,
                                                   double t1, double dt,
                                                   OdeOptions opts = {}) {
  OdeIntegrator<2, decltype(&rhs_asymmetry), decltype(&check_asymmetry)> ode(
      &rhs_asymmetry, &check_asymmetry, {u0, z0}, opts);
  std::vector<OdeSample> out;
  const auto count = static_cast<std::size_t>(t1 / dt * (1.0 + 1e-12));
  out.reserve(count + 1);
  for (std::size_t k = 0; k <= count; ++k) {
    const double t = dt * static_cast<double>(k);
    ode.advance_to(t);
    out.push_back({t, ode.state()});
  }
  return out;
}

// Same sampling for the share coordinates (x, y).
inline std::vector<OdeSample> two_word_trajectory(double x0, double y0,
                                                  double t1, double dt,
                                                  OdeOptions opts = {}) {
  OdeIntegrator<2, decltype(&rhs_two_word), decltype(&check_two_word)> ode(
      &rhs_two_word, &check_two_word, {x0, y0}, opts);
  std::vector<OdeSample> out;
  const auto count = static_cast<std::size_t>(t1 / dt * (1.0 + 1e-12));
  out.reserve(count + 1);
  for (std::size_t k = 0; k <= count; ++k) {
    const double t = dt * static_cast<double>(k);
    ode.advance_to(t);
    out.push_back({t, ode.state()});
  }
  return out;
}

// First time the asymmetry coordinate reaches the threshold, by stepping h at
// a time and interpolating the crossing linearly inside the step.
inline double asymmetry_crossing_time(double u0, double z0, double threshold,
                                      double t_max, OdeOptions opts = {}) {
  OdeIntegrator<2, decltype(&rhs_asymmetry), decltype(&check_asymmetry)> ode(
      &rhs_asymmetry, &check_asymmetry, {u0, z0}, opts);
  if (u0 >= threshold) return 0.0;
  double prev_t = 0.0;
  double prev_u = u0;
  while (ode.time() < t_max) {
    ode.advance_to(ode.time() + opts.h);
    const double u = ode.state()[0];
    if (u >= threshold) {
      return prev_t + (ode.time() - prev_t) * (threshold - prev_u) /
                          (u - prev_u);
    }
    prev_t = ode.time();
    prev_u = u;
  }
  throw std::runtime_error("asymmetry never reached threshold " +
                           std::to_string(threshold));
}

}  // namespace nglab
