#pragma once

// Error-rate bookkeeping over per-step decision records: realized and
// estimated false coverage proportions, the decaying-memory variant, sign
// and localization error counts, and Monte Carlo aggregation.
//
// Every ratio uses the convention 0/0 = 0.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace ofcr {

struct StepRecord {
  std::size_t index = 0;  // 1-based time
  bool selected = false;
  std::optional<bool> miscovered;  // known only when the parameter is known
  double level = 0.0;
  int sign_decision = 0;  // -1, 0 or +1
  std::optional<double> theta;  // ground truth, simulation only
  std::optional<bool> mislocalized;  // set iff a target set was reported

  void validate() const {
    if (index == 0) throw std::invalid_argument("step index must be positive");
    if (miscovered.value_or(false) && !selected) throw std::invalid_argument("miscovered step must be selected");
    if (sign_decision != 0 && !selected) throw std::invalid_argument("sign decision on an unselected step");
    if (sign_decision < -1 || sign_decision > 1) throw std::invalid_argument("sign decision must be -1, 0 or 1");
    if (mislocalized && !selected) throw std::invalid_argument("localization on an unselected step");
  }
};

namespace detail {
inline double ratio_or_zero(double num, double den) { return den > 0.0 ? num / den : 0.0; }
}  // namespace detail

/// Realized false coverage proportion over steps with index <= horizon.
inline double fcp(std::span<const StepRecord> records, std::size_t horizon) {
  std::size_t v = 0;
  std::size_t s = 0;
  for (const auto& r : records) {
    if (r.index > horizon || !r.selected) continue;
    if (!r.miscovered) throw std::invalid_argument("incomplete oracle data");
    ++s;
    if (*r.miscovered) ++v;
  }
  return detail::ratio_or_zero(static_cast<double>(v), static_cast<double>(s));
}

/// sum(levels) / max(#selections, 1).
inline double estimated_fcp(std::span<const double> levels, std::span<const bool> selections) {
  if (levels.size() != selections.size()) throw std::invalid_argument("levels and selections differ in length");
  double spent = 0.0;
  std::size_t s = 0;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] > 0.0 && levels[i] < 1.0)) throw std::invalid_argument("level outside (0,1)");
    spent += levels[i];
    if (selections[i]) ++s;
  }
  return spent / static_cast<double>(s > 0 ? s : 1);
}

/// Decaying-memory FCP: both counts weighted by decay^(horizon - i). With
/// decay = 1 every weight is exactly 1, so the sums are the integer counts of
/// fcp() and the result is bit-identical.
inline double mem_weighted_fcp(std::span<const StepRecord> records, double decay, std::size_t horizon) {
  if (!(decay > 0.0 && decay <= 1.0)) throw std::invalid_argument("decay must lie in (0,1]");
  double v = 0.0;
  double s = 0.0;
  for (const auto& r : records) {
    if (r.index > horizon || !r.selected) continue;
    if (!r.miscovered) throw std::invalid_argument("incomplete oracle data");
    const double w = std::pow(decay, static_cast<double>(horizon - r.index));
    s += w;
    if (*r.miscovered) v += w;
  }
  return detail::ratio_or_zero(v, s);
}

struct SignCounts {
  std::size_t false_signs = 0;
  std::size_t total_signs = 0;
};

/// A positive call is wrong when theta <= reference, a nonpositive call when
/// theta > reference (zero counts as nonpositive).
inline SignCounts sign_error_counts(std::span<const StepRecord> records, double reference = 0.0) {
  SignCounts out;
  for (const auto& r : records) {
    if (r.sign_decision == 0) continue;
    if (!r.theta) throw std::invalid_argument("incomplete oracle data");
    ++out.total_signs;
    const double d = *r.theta - reference;
    if ((r.sign_decision == 1 && d <= 0.0) || (r.sign_decision == -1 && d > 0.0)) ++out.false_signs;
  }
  return out;
}

/// Per-replication counts; enough to rebuild every rate in RateReport.
struct RateCounts {
  std::size_t selected = 0;
  std::size_t miscovered = 0;
  std::size_t false_signs = 0;
  std::size_t total_signs = 0;
  std::size_t false_localizations = 0;
  std::size_t total_localizations = 0;
  double spent = 0.0;  // sum of issued levels
};

struct RateReport {
  double fcp = 0.0;
  double est_fcp = 0.0;
  double fsp = 0.0;
  double flp = 0.0;
  std::size_t n_selected = 0;
  RateCounts counts;
};

inline RateReport rate_report(const RateCounts& c) {
  RateReport r;
  r.counts = c;
  r.n_selected = c.selected;
  r.fcp = detail::ratio_or_zero(static_cast<double>(c.miscovered), static_cast<double>(c.selected));
  r.est_fcp = c.spent / static_cast<double>(c.selected > 0 ? c.selected : 1);
  r.fsp = detail::ratio_or_zero(static_cast<double>(c.false_signs), static_cast<double>(c.total_signs));
  r.flp = detail::ratio_or_zero(static_cast<double>(c.false_localizations),
                                static_cast<double>(c.total_localizations));
  return r;
}

inline RateReport rate_report(std::span<const StepRecord> records, std::size_t horizon, double reference = 0.0) {
  RateCounts c;
  for (const auto& r : records) {
    if (r.index > horizon) continue;
    r.validate();
    c.spent += r.level;
    if (!r.selected) continue;
    ++c.selected;
    if (!r.miscovered) throw std::invalid_argument("incomplete oracle data");
    if (*r.miscovered) ++c.miscovered;
    if (r.mislocalized) {
      ++c.total_localizations;
      if (*r.mislocalized) ++c.false_localizations;
    }
  }
  std::vector<StepRecord> prefix;
  for (const auto& r : records) {
    if (r.index <= horizon) prefix.push_back(r);
  }
  const SignCounts sc = sign_error_counts(prefix, reference);
  c.false_signs = sc.false_signs;
  c.total_signs = sc.total_signs;
  return rate_report(c);
}

/// Point estimate with its Monte Carlo standard error.
struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

struct AggregateReport {
  std::size_t n_reps = 0;
  std::size_t n_reps_with_selection = 0;
  Estimate fcr;
  Estimate mfcr;
  Estimate pfcr;  // mean FCP over replications with at least one selection
  Estimate fsr;
  Estimate flr;
  Estimate mean_selected;
  Estimate est_fcp;
};

namespace detail {
inline Estimate mean_and_se(const std::vector<double>& xs) {
  Estimate e;
  if (xs.empty()) return e;
  const double n = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  e.value = sum / n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - e.value) * (x - e.value);
    e.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return e;
}

// Ratio of means with a delta-method standard error.
inline Estimate ratio_of_means(const std::vector<double>& num, const std::vector<double>& den) {
  Estimate e;
  const double n = static_cast<double>(num.size());
  if (num.empty()) return e;
  double sn = 0.0;
  double sd = 0.0;
  for (std::size_t i = 0; i < num.size(); ++i) {
    sn += num[i];
    sd += den[i];
  }
  if (sd <= 0.0) return e;
  e.value = sn / sd;
  if (num.size() > 1) {
    const double dbar = sd / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < num.size(); ++i) {
      const double r = num[i] - e.value * den[i];
      ss += r * r;
    }
    e.se = std::sqrt(ss / (n - 1.0) / n) / dbar;
  }
  return e;
}
}  // namespace detail

inline AggregateReport aggregate_rates(std::span<const RateReport> reps) {
  if (reps.empty()) throw std::invalid_argument("aggregate_rates needs at least one replication");
  AggregateReport out;
  out.n_reps = reps.size();
  std::vector<double> fcps, pos_fcps, v, s, fsps, flps, est;
  for (const auto& r : reps) {
    fcps.push_back(r.fcp);
    v.push_back(static_cast<double>(r.counts.miscovered));
    s.push_back(static_cast<double>(r.counts.selected));
    est.push_back(r.est_fcp);
    fsps.push_back(r.fsp);
    flps.push_back(r.flp);
    if (r.counts.selected > 0) pos_fcps.push_back(r.fcp);
  }
  out.n_reps_with_selection = pos_fcps.size();
  out.fcr = detail::mean_and_se(fcps);
  out.mfcr = detail::ratio_of_means(v, s);
  out.pfcr = detail::mean_and_se(pos_fcps);
  out.fsr = detail::mean_and_se(fsps);
  out.flr = detail::mean_and_se(flps);
  out.mean_selected = detail::mean_and_se(s);
  out.est_fcp = detail::mean_and_se(est);
  return out;
}

}  // namespace ofcr
