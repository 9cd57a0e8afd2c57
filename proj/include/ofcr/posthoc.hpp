#pragma once

// Time-uniform high-probability upper bound on the FCP:
//
//   FCP(n) <= (a + sum alpha_i) / sum S_i * log(1/delta) / (a log(1 + log(1/delta)/a))
//
// simultaneously for all n, with probability at least 1 - delta.

#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ofcr/protocol.hpp"
#include "ofcr/scheduler.hpp"

namespace ofcr {

struct PosthocConfig {
  double a = 1.0;
  double delta = 0.05;

  void validate() const {
    if (!(a > 0.0 && std::isfinite(a))) throw std::invalid_argument("posthoc constant a must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("posthoc delta must lie in (0,1)");
  }
};

/// A bound value, or vacuous when nothing has been selected yet.
class FcpBound {
 public:
  static FcpBound vacuous() { return FcpBound(); }
  static FcpBound finite(double v) { return FcpBound(v); }

  bool is_vacuous() const { return !value_.has_value(); }
  /// Throws on a vacuous bound.
  double value() const {
    if (!value_) throw std::logic_error("vacuous FCP bound has no finite value");
    return *value_;
  }
  /// +inf for a vacuous bound.
  double value_or_inf() const { return value_ ? *value_ : std::numeric_limits<double>::infinity(); }
  /// True if the bound certifies fcp (a vacuous bound certifies everything).
  bool covers(double fcp) const { return !value_ || fcp <= *value_; }

  friend bool operator==(const FcpBound&, const FcpBound&) = default;

 private:
  FcpBound() = default;
  explicit FcpBound(double v) : value_(v) {}
  std::optional<double> value_;
};

/// log(1/delta) / (a log(1 + log(1/delta)/a)).
inline double posthoc_factor(const PosthocConfig& cfg) {
  cfg.validate();
  const double l = -std::log(cfg.delta);
  return l / (cfg.a * std::log1p(l / cfg.a));
}

inline FcpBound bound_from_sums(double level_sum, double n_selected, const PosthocConfig& cfg) {
  const double factor = posthoc_factor(cfg);
  if (n_selected <= 0.0) return FcpBound::vacuous();
  return FcpBound::finite((cfg.a + level_sum) / n_selected * factor);
}

inline FcpBound fcp_upper_bound(std::span<const double> levels, std::span<const bool> selections,
                                const PosthocConfig& cfg, std::size_t n) {
  cfg.validate();
  if (levels.size() != selections.size()) throw std::invalid_argument("levels and selections differ in length");
  if (n < 1 || n > levels.size()) throw std::invalid_argument("prefix length out of range");
  detail::CompensatedSum sum;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sum.add(levels[i]);
    count += selections[i] ? 1 : 0;
  }
  return bound_from_sums(sum.value(), static_cast<double>(count), cfg);
}

struct BoundPoint {
  std::size_t n;
  FcpBound bound;
};

/// The bound at every prefix n = 1..T, in one pass.
inline std::vector<BoundPoint> track_uniform_bound(std::span<const double> levels, std::span<const bool> selections,
                                                   const PosthocConfig& cfg) {
  cfg.validate();
  if (levels.size() != selections.size()) throw std::invalid_argument("levels and selections differ in length");
  std::vector<BoundPoint> out;
  out.reserve(levels.size());
  detail::CompensatedSum sum;
  std::size_t count = 0;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    sum.add(levels[i]);
    count += selections[i] ? 1 : 0;
    out.push_back({i + 1, bound_from_sums(sum.value(), static_cast<double>(count), cfg)});
  }
  return out;
}

inline std::vector<BoundPoint> track_uniform_bound(const RunLog& log, const PosthocConfig& cfg) {
  const std::size_t n = log.steps.size();
  std::vector<double> levels(n);
  auto selected = std::make_unique<bool[]>(n);  // std::vector<bool> has no contiguous storage
  for (std::size_t i = 0; i < n; ++i) {
    levels[i] = log.steps[i].level;
    selected[i] = log.steps[i].selected;
  }
  return track_uniform_bound(levels, std::span<const bool>(selected.get(), n), cfg);
}

}  // namespace ofcr
