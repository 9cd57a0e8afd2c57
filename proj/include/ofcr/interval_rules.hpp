#pragma once

// Confidence interval rules for a single N(theta, 1) observation.
//
// Marginal rules (symmetric, one-sided, MQC) cover theta with probability at
// least 1 - level for every theta and are nested in the level. The
// conditional rule inverts shortest acceptance regions of a normal law
// truncated to the selection event {X > c} or {|X| > c}.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "ofcr/interval.hpp"
#include "ofcr/normal.hpp"

namespace ofcr {

inline constexpr double kLevelEpsilon = 1e-12;

inline void validate_level(double level) {
  if (!(level > kLevelEpsilon && level < 1.0 - kLevelEpsilon)) {
    throw std::invalid_argument("level must lie in (1e-12, 1 - 1e-12)");
  }
}

inline void validate_observation(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("observation must be finite");
}

enum class MarginalKind { symmetric, one_sided, mqc };

inline const char* to_string(MarginalKind k) {
  switch (k) {
    case MarginalKind::symmetric: return "symmetric";
    case MarginalKind::one_sided: return "one_sided";
    case MarginalKind::mqc: return "mqc";
  }
  return "?";
}

struct MarginalRuleSpec {
  MarginalKind kind = MarginalKind::symmetric;
  double psi = 0.7;  // MQC only

  static MarginalRuleSpec symmetric() { return {MarginalKind::symmetric, 0.7}; }
  static MarginalRuleSpec one_sided() { return {MarginalKind::one_sided, 0.7}; }
  static MarginalRuleSpec mqc(double psi = 0.7) {
    MarginalRuleSpec s{MarginalKind::mqc, psi};
    s.validate();
    return s;
  }

  void validate() const {
    if (kind == MarginalKind::mqc && !(psi > 0.5 && psi < 1.0)) {
      throw std::invalid_argument("MQC psi must lie in (0.5, 1)");
    }
  }

  friend bool operator==(const MarginalRuleSpec& a, const MarginalRuleSpec& b) {
    return a.kind == b.kind && (a.kind != MarginalKind::mqc || a.psi == b.psi);
  }
};

/// A marginal rule with the quantiles for one level computed up front, for
/// loops that evaluate many observations at the same level.
class PreparedMarginalRule {
 public:
  PreparedMarginalRule(const MarginalRuleSpec& spec, double level) : spec_(spec), level_(level) {
    validate_level(level);
    spec.validate();
    // The one-sided and MQC constructions need z_{level} (resp. z_{psi level})
    // positive. Above that the level is capped, which only widens the
    // interval: coverage stays >= 1 - level and nesting is kept.
    const double a = std::min(level, max_constructive_level(spec));
    switch (spec.kind) {
      case MarginalKind::symmetric:
        half_ = normal::upper_quantile(a / 2.0);
        break;
      case MarginalKind::one_sided:
        half_ = normal::upper_quantile(a);
        break;
      case MarginalKind::mqc:
        half_ = normal::upper_quantile(a / 2.0);
        sign_cut_ = normal::upper_quantile(spec.psi * a);
        plateau_ = half_ + sign_cut_;
        far_ = plateau_ + normal::upper_quantile((1.0 - spec.psi) * a);
        break;
    }
  }

  static double max_constructive_level(const MarginalRuleSpec& spec) {
    constexpr double below_half = 0.5 - 1e-9;
    switch (spec.kind) {
      case MarginalKind::symmetric: return 1.0;
      case MarginalKind::one_sided: return below_half;
      case MarginalKind::mqc: return below_half / spec.psi;
    }
    return 1.0;
  }

  const MarginalRuleSpec& spec() const { return spec_; }
  double level() const { return level_; }

  Interval operator()(double x) const {
    validate_observation(x);
    switch (spec_.kind) {
      case MarginalKind::symmetric:
        return Interval::open(x - half_, x + half_);
      case MarginalKind::one_sided:
        if (x > half_) return Interval::open(0.0, x + half_);
        if (x < -half_) return Interval(x - half_, 0.0, true, false);
        return Interval::open(x - half_, x + half_);
      case MarginalKind::mqc:
        return mqc(x);
    }
    return Interval::empty();
  }

 private:
  // Inversion of the acceptance regions
  //   theta in (0, plateau]:  (-sign_cut, far)
  //   theta > plateau:        (theta - half, max(far, theta + half))
  // mirrored for theta <= 0 (zero sits on the nonpositive side). The lower
  // tail near zero carries psi * level and the upper tail the rest, so the
  // interval leaves the nonpositive half-line once x >= z_{psi level}.
  Interval mqc(double x) const {
    if (x >= far_) return Interval::open(x - half_, x + half_);
    if (x >= sign_cut_) return Interval::open(0.0, x + half_);
    if (x > -sign_cut_) return Interval::closed(-plateau_, plateau_);
    if (x == -sign_cut_) return Interval::closed(-plateau_, 0.0);
    if (x > -far_) return Interval(x - half_, 0.0, true, false);
    return Interval::open(x - half_, x + half_);
  }

  MarginalRuleSpec spec_;
  double level_;
  double half_ = 0.0;
  double sign_cut_ = 0.0;
  double plateau_ = 0.0;
  double far_ = 0.0;
};

/// (x - z_{level/2}, x + z_{level/2}).
inline Interval symmetric_interval(double x, double level) {
  return PreparedMarginalRule(MarginalRuleSpec::symmetric(), level)(x);
}

/// Central (x - z, x + z) for |x| <= z, otherwise (0, x + z) or (x - z, 0],
/// with z = z_level.
inline Interval one_sided_interval(double x, double level) {
  return PreparedMarginalRule(MarginalRuleSpec::one_sided(), level)(x);
}

inline Interval mqc_interval(double x, double level, double psi) {
  return PreparedMarginalRule(MarginalRuleSpec::mqc(psi), level)(x);
}

inline Interval marginal_interval(const MarginalRuleSpec& spec, double x, double level) {
  return PreparedMarginalRule(spec, level)(x);
}

/// True when the interval shifted by -null_value lies in (0, inf) (returns
/// +1) or in (-inf, 0] (returns -1); 0 otherwise.
inline int sign_of_interval(const Interval& iv, double null_value = 0.0) {
  if (iv.is_empty()) return 0;
  if (iv.subset_of(Interval::open(null_value, kInf))) return 1;
  if (iv.subset_of(Interval(-kInf, null_value, true, false))) return -1;
  return 0;
}

/// Smallest |x| at which the rule's interval determines the sign (relative
/// to zero). Closed form for the symmetric and one-sided rules; bisection on
/// the prepared rule otherwise, returning the largest probed x that does not
/// yet determine the sign.
inline double sign_determination_threshold(const MarginalRuleSpec& spec, double level) {
  validate_level(level);
  switch (spec.kind) {
    case MarginalKind::symmetric: return normal::upper_quantile(level / 2.0);
    case MarginalKind::one_sided:
      return normal::upper_quantile(std::min(level, PreparedMarginalRule::max_constructive_level(spec)));
    case MarginalKind::mqc: break;
  }
  const PreparedMarginalRule rule(spec, level);
  double lo = 0.0;
  double hi = 1.0;
  while (sign_of_interval(rule(hi)) != 1) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw std::runtime_error("rule never determines the sign");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (sign_of_interval(rule(mid)) == 1 ? hi : lo) = mid;
  }
  return lo;
}

// ---------------------------------------------------------------------------
// Conditional (truncated normal) intervals

struct TruncationContext {
  enum class Shape { right_tail, two_sided };
  Shape shape = Shape::two_sided;
  double c = 0.0;

  static TruncationContext right_tail(double c) { return {Shape::right_tail, c}; }
  static TruncationContext two_sided(double c) { return {Shape::two_sided, c}; }

  bool in_support(double x) const { return shape == Shape::right_tail ? x > c : std::abs(x) > c; }
};

/// log P_theta(|Y - theta| >= |x - theta| | Y in the truncation region).
/// The shortest acceptance region at theta contains x exactly when this
/// probability is at least the level.
inline double conditional_log_outer_mass(double x, double theta, const TruncationContext& ctx) {
  using normal::upper_tail;
  const double r = std::abs(x - theta);
  const double c = ctx.c;
  if (ctx.shape == TruncationContext::Shape::right_tail) {
    if (theta - r <= c) return normal::log_tail_ratio(r, c - theta);
    // Both tails of the level set lie inside (c, inf).
    const double q_shift = upper_tail(theta - c);
    const double ratio = std::exp(normal::log_tail_ratio(theta - c, r));
    return normal::log_upper_tail(r) + std::log(2.0 - ratio) - std::log1p(-q_shift);
  }
  // Two-sided truncation: support is |y| > c.
  const double u = theta + r;  // upper edge of the level set
  const double v = theta - r;  // lower edge
  double upper = 0.0;
  if (u >= c) {
    upper = upper_tail(r);
  } else if (u >= -c) {
    upper = upper_tail(c - theta);
  } else {
    upper = upper_tail(c - theta) + normal::mass_between(u - theta, -c - theta);
  }
  double lower = 0.0;
  if (v <= -c) {
    lower = upper_tail(r);
  } else if (v <= c) {
    lower = upper_tail(c + theta);
  } else {
    lower = upper_tail(c + theta) + normal::mass_between(c - theta, v - theta);
  }
  const double z = upper_tail(c - theta) + upper_tail(c + theta);
  const double num = upper + lower;
  if (!(num > 0.0)) return -1e4;
  return std::log(num) - std::log(z);
}

/// {theta : x lies in the shortest level-(1 - level) acceptance region of the
/// truncated law}. Returned closed; endpoints are resolved to ~1e-10 and
/// rounded outward.
inline Interval conditional_truncated_interval(double x, const TruncationContext& ctx, double level) {
  validate_level(level);
  validate_observation(x);
  if (!std::isfinite(ctx.c)) throw std::invalid_argument("truncation cutoff must be finite");
  if (!ctx.in_support(x)) throw std::invalid_argument("observation inconsistent with selection event");

  const double log_level = std::log(level);
  auto f = [&](double theta) {
    return std::max(conditional_log_outer_mass(x, theta, ctx), -1e4) - log_level;
  };

  auto endpoint = [&](double direction) {
    double inner = x;
    double step = 1.0;
    double outer = x + direction * step;
    int expansions = 0;
    while (f(outer) >= 0.0) {
      inner = outer;
      step *= 2.0;
      outer = x + direction * step;
      if (++expansions > 60) {
        throw std::runtime_error("conditional interval: no bracket for endpoint (x=" + std::to_string(x) +
                                 ", c=" + std::to_string(ctx.c) + ", level=" + std::to_string(level) + ")");
      }
    }
    double a = std::min(inner, outer);
    double b = std::max(inner, outer);
    std::uintmax_t max_iter = 200;
    auto tol = [](double lo, double hi) { return std::abs(hi - lo) <= 1e-10 * std::max(1.0, std::abs(lo)); };
    const auto bracket = boost::math::tools::toms748_solve(f, a, b, f(a), f(b), tol, max_iter);
    if (max_iter >= 200) {
      throw std::runtime_error("conditional interval: root finder did not converge (x=" + std::to_string(x) +
                               ", bracket=[" + std::to_string(bracket.first) + ", " +
                               std::to_string(bracket.second) + "])");
    }
    return direction < 0 ? bracket.first : bracket.second;
  };

  const double lo = endpoint(-1.0);
  const double hi = endpoint(1.0);
  return Interval::closed(lo, hi);
}

// ---------------------------------------------------------------------------
// CI-derived p-values

/// sup{level : I(x, level) meets the null set}, for a rule nested in the
/// level. `rule` is any callable (x, level) -> Interval.
template <class Rule>
double ci_pvalue(const Rule& rule, double x, const IntervalSet& null_set, double tol = 1e-8) {
  auto hits = [&](double level) { return null_set.intersects(rule(x, level)); };
  std::vector<double> grid = {2e-12, 1e-10, 1e-8, 1e-6, 1e-4};
  for (int k = 1; k < 128; ++k) grid.push_back(k / 128.0);
  grid.push_back(1.0 - 2e-12);

  std::vector<char> h;
  h.reserve(grid.size());
  for (double a : grid) h.push_back(hits(a) ? 1 : 0);
  for (std::size_t k = 1; k < h.size(); ++k) {
    if (h[k] && !h[k - 1]) throw std::runtime_error("rule violates nesting");
  }
  if (!h.front()) return 0.0;
  if (h.back()) return 1.0;
  std::size_t first_miss = 0;
  while (h[first_miss]) ++first_miss;
  double lo = grid[first_miss - 1];
  double hi = grid[first_miss];
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (hits(mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// ci_pvalue for a marginal rule spec.
inline double ci_pvalue(const MarginalRuleSpec& spec, double x, const IntervalSet& null_set, double tol = 1e-8) {
  return ci_pvalue([&spec](double xx, double a) { return marginal_interval(spec, xx, a); }, x, null_set, tol);
}

}  // namespace ofcr
