#pragma once
// Small statistics toolbox: running moments, incomplete gamma machinery
// (chi-square and Poisson tails), Kolmogorov-Smirnov, two-sample chi-square,
// and least squares. Everything is plain double precision.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace nglab {

// Running mean / central moments up to order 4 (single pass, Pebay updates).
class Summary {
 public:
  void add(double x) {
    const double n1 = static_cast<double>(count_);
    ++count_;
    const double n = static_cast<double>(count_);
    const double delta = x - mean_;
    const double delta_n = delta / n;
    const double delta_n2 = delta_n * delta_n;
    const double term1 = delta * delta_n * n1;
    mean_ += delta_n;
    m4_ += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * m2_ -
           4.0 * delta_n * m3_;
    m3_ += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * m2_;
    m2_ += term1;
  }

  std::int64_t count() const { return count_; }
  double mean() const { return mean_; }

  double variance() const {  // sample variance (n-1)
    assert(count_ >= 2);
    return m2_ / static_cast<double>(count_ - 1);
  }
  double sd() const { return std::sqrt(variance()); }
  double se_mean() const { return sd() / std::sqrt(static_cast<double>(count_)); }

  // Standard error of the sample variance, via the fourth central moment:
  // Var(s^2) = (m4 - (n-3)/(n-1) s^4) / n.
  double se_variance() const {
    assert(count_ >= 4);
    const double n = static_cast<double>(count_);
    const double m4 = m4_ / n;
    const double s2 = variance();
    const double v = (m4 - (n - 3.0) / (n - 1.0) * s2 * s2) / n;
    return std::sqrt(std::max(v, 0.0));
  }

 private:
  std::int64_t count_ = 0;
  double mean_ = 0.0, m2_ = 0.0, m3_ = 0.0, m4_ = 0.0;
};

namespace detail {

inline double gamma_p_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int i = 0; i < 100000; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-17) {
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
  }
  throw std::runtime_error("gamma_p series failed to converge");
}

inline double gamma_q_contfrac(double a, double x) {
  // Modified Lentz evaluation of the standard continued fraction for Q(a,x).
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 100000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) {
      return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
  }
  throw std::runtime_error("gamma_q continued fraction failed to converge");
}

}  // namespace detail

// Regularized lower incomplete gamma P(a,x).
inline double gamma_p(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) {
    throw std::invalid_argument("gamma_p: need a > 0 and x >= 0");
  }
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_contfrac(a, x);
}

// Regularized upper incomplete gamma Q(a,x) = 1 - P(a,x).
inline double gamma_q(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) {
    throw std::invalid_argument("gamma_q: need a > 0 and x >= 0");
  }
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_contfrac(a, x);
}

// Survival function of the chi-square distribution with k degrees of freedom.
inline double chi2_sf(double x, int k) {
  if (k <= 0) throw std::invalid_argument("chi2_sf: need k > 0");
  if (x <= 0.0) return 1.0;
  return gamma_q(0.5 * k, 0.5 * x);
}

// P(Poisson(mean) <= k), exact via the incomplete gamma identity.
inline double poisson_cdf(std::int64_t k, double mean) {
  if (!(mean >= 0.0)) throw std::invalid_argument("poisson_cdf: mean < 0");
  if (k < 0) return 0.0;
  if (mean == 0.0) return 1.0;
  return gamma_q(static_cast<double>(k) + 1.0, mean);
}

// Kolmogorov survival function Q_KS(lambda) = 2 sum_k (-1)^{k-1} e^{-2k^2l^2}.
inline double ks_sf(double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("ks_sf: lambda < 0");
  if (lambda < 0.05) return 1.0;  // series numerically useless, limit is 1
  const double e = std::exp(-2.0 * lambda * lambda);
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::pow(e, static_cast<double>(k) * k);
    sum += sign * term;
    if (term < 1e-18) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

// Two-sample KS statistic; both inputs must be sorted ascending.
inline double ks_statistic(const std::vector<double>& a,
                           const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks: empty sample");
  assert(std::is_sorted(a.begin(), a.end()));
  assert(std::is_sorted(b.begin(), b.end()));
  std::size_t i = 0, j = 0;
  double d = 0.0;
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    const double va = a[i], vb = b[j];
    if (va <= vb) while (i < a.size() && a[i] == va) ++i;
    if (vb <= va) while (j < b.size() && b[j] == vb) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na -
                              static_cast<double>(j) / nb));
  }
  return d;
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Asymptotic two-sample KS test: p = Q_KS(sqrt(n1 n2/(n1+n2)) D).
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  KsResult r;
  r.statistic = ks_statistic(a, b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  r.p_value = ks_sf(std::sqrt(na * nb / (na + nb)) * r.statistic);
  return r;
}

struct Chi2Result {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
};

// Two-sample chi-square over aligned bins. Adjacent bins are merged until the
// expected count (pooled proportion times sample total) reaches min_expected
// in both samples; a trailing short group joins its left neighbour.
inline Chi2Result chi2_two_sample(const std::vector<std::int64_t>& a,
                                  const std::vector<std::int64_t>& b,
                                  double min_expected = 5.0) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("chi2_two_sample: bins misaligned");
  }
  double ta = 0.0, tb = 0.0;
  for (auto v : a) ta += static_cast<double>(v);
  for (auto v : b) tb += static_cast<double>(v);
  if (ta <= 0.0 || tb <= 0.0) {
    throw std::invalid_argument("chi2_two_sample: empty sample");
  }
  const double total = ta + tb;

  std::vector<double> ga, gb;  // merged groups
  double ca = 0.0, cb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca += static_cast<double>(a[i]);
    cb += static_cast<double>(b[i]);
    const double pooled = ca + cb;
    if (ta * pooled / total >= min_expected &&
        tb * pooled / total >= min_expected) {
      ga.push_back(ca);
      gb.push_back(cb);
      ca = cb = 0.0;
    }
  }
  if (ca + cb > 0.0) {
    if (ga.empty()) {
      ga.push_back(ca);
      gb.push_back(cb);
    } else {
      ga.back() += ca;
      gb.back() += cb;
    }
  }

  Chi2Result r;
  const double sa = std::sqrt(tb / ta);  // scale factors equalize the totals
  const double sb = std::sqrt(ta / tb);
  int groups = 0;
  for (std::size_t g = 0; g < ga.size(); ++g) {
    const double pooled = ga[g] + gb[g];
    if (pooled <= 0.0) continue;
    ++groups;
    const double diff = sa * ga[g] - sb * gb[g];
    r.statistic += diff * diff / pooled;
  }
  r.df = groups - 1;  // totals are equal by construction in every caller
  if (r.df < 1) throw std::invalid_argument("chi2_two_sample: too few groups");
  r.p_value = chi2_sf(r.statistic, r.df);
  return r;
}

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double se_slope = 0.0;
  double se_intercept = 0.0;
  double r2 = 1.0;
};

// Ordinary least squares y = intercept + slope * x with standard errors.
inline FitResult least_squares(const std::vector<double>& x,
                               const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("least_squares: need >= 2 aligned points");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 0.0) throw std::invalid_argument("least_squares: degenerate x");
  FitResult f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    sse += e * e;
  }
  if (x.size() > 2) {
    const double s2 = sse / (n - 2.0);
    f.se_slope = std::sqrt(s2 / sxx);
    f.se_intercept = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
  }
  f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return f;
}

// Upper 97.5% Student-t quantile (two-sided 95% interval half-width factor).
inline double t975(int df) {
  static constexpr double kTable[30] = {
      12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
      2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
      2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
  if (df < 1) throw std::invalid_argument("t975: df < 1");
  if (df <= 30) return kTable[df - 1];
  if (df <= 40) return 2.021;
  if (df <= 60) return 2.000;
  if (df <= 120) return 1.980;
  return 1.960;
}

// Linear-interpolation quantile of a sorted sample (numpy default rule).
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: bad q");
  assert(std::is_sorted(sorted.begin(), sorted.end()));
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, 0.5);
}

}  // namespace nglab
