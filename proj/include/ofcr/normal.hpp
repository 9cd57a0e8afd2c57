#pragma once

// Standard normal distribution helpers used by every interval rule.
//
// The CDF and upper tail come from std::erfc; the quantile goes through
// boost::math::erfc_inv. Tail probabilities are also available on a log
// scale so that truncated-normal ratios stay finite far into the tails.

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

namespace ofcr::normal {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

inline double pdf(double t) { return std::exp(-0.5 * t * t - kLogSqrt2Pi); }

/// Phi(t).
inline double cdf(double t) { return 0.5 * std::erfc(-t * kInvSqrt2); }

/// Q(t) = 1 - Phi(t), computed without cancellation for large t.
inline double upper_tail(double t) { return 0.5 * std::erfc(t * kInvSqrt2); }

/// log Q(t), finite for every finite t.
inline double log_upper_tail(double t) {
  if (t < -5.0) return std::log1p(-upper_tail(-t));
  if (t <= 30.0) return std::log(upper_tail(t));
  // Mills ratio Q(t)/phi(t) by its continued fraction, evaluated bottom-up.
  double frac = t;
  for (int k = 60; k >= 1; --k) frac = t + k / frac;
  return -0.5 * t * t - kLogSqrt2Pi - std::log(frac);
}

/// log(Q(a) / Q(b)). When both arguments are far in the upper tail the
/// quadratic parts are cancelled analytically.
inline double log_tail_ratio(double a, double b) {
  if (a <= 30.0 || b <= 30.0) return log_upper_tail(a) - log_upper_tail(b);
  auto log_mills = [](double t) {
    double frac = t;
    for (int k = 60; k >= 1; --k) frac = t + k / frac;
    return -std::log(frac);
  };
  return -0.5 * (a - b) * (a + b) + log_mills(a) - log_mills(b);
}

/// Probability that a standard normal falls in (a, b); a <= b.
/// Differences are taken in whichever tail keeps precision.
inline double mass_between(double a, double b) {
  if (!(a < b)) return 0.0;
  if (a >= 0.0) return upper_tail(a) - upper_tail(b);
  if (b <= 0.0) return upper_tail(-b) - upper_tail(-a);
  return 1.0 - upper_tail(-a) - upper_tail(b);
}

/// Phi^{-1}(p) for p in (0, 1).
inline double quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) return std::numeric_limits<double>::quiet_NaN();
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

/// Upper quantile z_p, i.e. Q(z_p) = p.
inline double upper_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

}  // namespace ofcr::normal
