#pragma once

// Selection rules S_i and the monotonicity audit.
//
// Rules may look at the current observation and at the committed level (and
// through it, at past selections) but never at past observations.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "ofcr/interval.hpp"
#include "ofcr/interval_rules.hpp"
#include "ofcr/scheduler.hpp"

namespace ofcr {

struct FixedThreshold {
  double threshold = 3.0;
  bool two_sided = true;
};

struct SignDetermining {
  MarginalRuleSpec rule;
  double null_value = 0.0;
};

/// Report I only when it lies inside exactly one of the target sets.
struct Localization {
  MarginalRuleSpec rule;
  std::vector<IntervalSet> targets;

  void validate() const {
    rule.validate();
    for (std::size_t a = 0; a < targets.size(); ++a) {
      for (std::size_t b = a + 1; b < targets.size(); ++b) {
        if (targets[a].intersects(targets[b])) {
          throw std::invalid_argument("localization targets must be pairwise disjoint");
        }
      }
    }
  }
};

/// Reject the composite null when I misses it.
struct CompositeTest {
  MarginalRuleSpec rule;
  IntervalSet null_set;
};

using RuleSpec = std::variant<FixedThreshold, SignDetermining, Localization, CompositeTest>;

inline void validate(const RuleSpec& spec) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, FixedThreshold>) {
          if (!std::isfinite(s.threshold)) throw std::invalid_argument("threshold must be finite");
        } else if constexpr (std::is_same_v<T, Localization>) {
          s.validate();
        } else {
          s.rule.validate();
        }
      },
      spec);
}

struct SelectionOutcome {
  bool selected = false;
  std::optional<int> localized_index;  // 1-based
  std::optional<int> sign;
  std::optional<Interval> candidate;  // the candidate CI, for CI-driven rules
};

inline SelectionOutcome decide(const RuleSpec& spec, double x, double level) {
  validate_observation(x);
  return std::visit(
      [&](const auto& s) -> SelectionOutcome {
        using T = std::decay_t<decltype(s)>;
        SelectionOutcome out;
        if constexpr (std::is_same_v<T, FixedThreshold>) {
          out.selected = s.two_sided ? std::abs(x) > s.threshold : x > s.threshold;
        } else if constexpr (std::is_same_v<T, SignDetermining>) {
          const Interval iv = marginal_interval(s.rule, x, level);
          out.candidate = iv;
          const int sign = sign_of_interval(iv, s.null_value);
          if (sign != 0) {
            out.selected = true;
            out.sign = sign;
            if (iv.contains(s.null_value) && iv.lo() < s.null_value && s.null_value < iv.hi()) {
              throw std::logic_error("sign-determining selection with the null value strictly inside");
            }
          }
        } else if constexpr (std::is_same_v<T, Localization>) {
          const Interval iv = marginal_interval(s.rule, x, level);
          out.candidate = iv;
          int hits = 0;
          for (std::size_t j = 0; j < s.targets.size(); ++j) {
            if (s.targets[j].contains_interval(iv)) {
              ++hits;
              out.localized_index = static_cast<int>(j + 1);
            }
          }
          if (hits == 1) {
            out.selected = true;
          } else {
            out.localized_index.reset();
          }
        } else if constexpr (std::is_same_v<T, CompositeTest>) {
          const Interval iv = marginal_interval(s.rule, x, level);
          out.candidate = iv;
          out.selected = !s.null_set.intersects(iv);
        }
        return out;
      },
      spec);
}

/// |x| cutoff equivalent to sign-determining selection: z_{level/2} for the
/// symmetric rule, z_level for the one-sided rule.
inline double equivalent_pvalue_threshold(const SignDetermining& spec, double level) {
  validate_level(level);
  switch (spec.rule.kind) {
    case MarginalKind::symmetric: return normal::upper_quantile(level / 2.0);
    case MarginalKind::one_sided: return sign_determination_threshold(spec.rule, level);
    case MarginalKind::mqc: break;
  }
  throw std::invalid_argument("no closed-form cutoff; use bisection audit");
}

// ---------------------------------------------------------------------------
// Monotonicity audit

struct AuditViolation {
  std::vector<bool> larger_history;
  std::vector<bool> smaller_history;
  double x = 0.0;
  double larger_level = 0.0;
  double smaller_level = 0.0;
};

struct AuditReport {
  std::size_t history_len = 0;
  std::size_t pairs_checked = 0;
  std::size_t decisions_checked = 0;
  std::size_t n_violations = 0;
  std::vector<AuditViolation> violations;  // first few witnesses
};

struct AuditOptions {
  double alpha = 0.1;
  double w0 = 0.05;
  std::size_t max_witnesses = 10;
  std::vector<double> extra_x;  // branch points of the rule
};

/// Grid of observations: 201 points on [-6, 6] plus the extras.
inline std::vector<double> audit_grid(const std::vector<double>& extra) {
  std::vector<double> xs;
  for (int k = 0; k <= 200; ++k) xs.push_back(-6.0 + 12.0 * k / 200.0);
  xs.insert(xs.end(), extra.begin(), extra.end());
  return xs;
}

/// For every pair of histories s >= s~ (coordinatewise) of each length up to
/// history_len, replays the scheduler and checks S(x, level(s)) >=
/// S(x, level(s~)) on the observation grid. `select` is a callable
/// (x, level) -> bool.
template <class Select>
  requires std::is_invocable_r_v<bool, const Select&, double, double>
AuditReport monotonicity_audit(const Select& select, std::size_t history_len, const AuditOptions& opts = {}) {
  if (history_len > 12) throw std::invalid_argument("history length above 12 is not audited exhaustively");
  const auto gamma = std::make_shared<const GammaSequence>(GammaSequence::default_lord(history_len + 1));
  const std::vector<double> xs = audit_grid(opts.extra_x);
  AuditReport report;
  report.history_len = history_len;

  for (std::size_t len = 0; len <= history_len; ++len) {
    const std::uint32_t n_hist = 1u << len;
    std::vector<double> levels(n_hist);
    // decisions[h * xs.size() + k]
    std::vector<char> decisions(static_cast<std::size_t>(n_hist) * xs.size());
    for (std::uint32_t h = 0; h < n_hist; ++h) {
      LordCiScheduler sched(opts.alpha, opts.w0, gamma);
      for (std::size_t t = 0; t < len; ++t) sched.record_decision(t + 1, ((h >> t) & 1u) != 0);
      levels[h] = sched.next_level();
      for (std::size_t k = 0; k < xs.size(); ++k) decisions[h * xs.size() + k] = select(xs[k], levels[h]) ? 1 : 0;
    }
    auto unpack = [len](std::uint32_t h) {
      std::vector<bool> v(len);
      for (std::size_t t = 0; t < len; ++t) v[t] = ((h >> t) & 1u) != 0;
      return v;
    };
    for (std::uint32_t big = 0; big < n_hist; ++big) {
      // Enumerate every submask of `big` (including zero).
      for (std::uint32_t small = big;; small = (small - 1) & big) {
        ++report.pairs_checked;
        for (std::size_t k = 0; k < xs.size(); ++k) {
          ++report.decisions_checked;
          if (decisions[small * xs.size() + k] && !decisions[big * xs.size() + k]) {
            ++report.n_violations;
            if (report.violations.size() < opts.max_witnesses) {
              report.violations.push_back({unpack(big), unpack(small), xs[k], levels[big], levels[small]});
            }
          }
        }
        if (small == 0) break;
      }
    }
  }
  return report;
}

/// Audit of a declarative rule. Fixed thresholds contribute their cutoffs to
/// the grid; branch points of CI-driven rules move with the level and are
/// covered only through the grid and `opts.extra_x`.
inline AuditReport monotonicity_audit(const RuleSpec& spec, std::size_t history_len, AuditOptions opts = {}) {
  validate(spec);
  if (const auto* ft = std::get_if<FixedThreshold>(&spec)) {
    for (double t : {ft->threshold, -ft->threshold}) {
      opts.extra_x.push_back(t);
      opts.extra_x.push_back(std::nextafter(t, kInf));
      opts.extra_x.push_back(std::nextafter(t, -kInf));
    }
  }
  return monotonicity_audit([&spec](double x, double level) { return decide(spec, x, level).selected; },
                            history_len, opts);
}

}  // namespace ofcr
