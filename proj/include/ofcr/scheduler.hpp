#pragma once

// Level schedulers for online false coverage rate control.
//
// LordCiScheduler issues the predictable levels
//
//   alpha_i = gamma_i W0 + (alpha - W0) gamma_{i - tau_1}
//             + alpha * sum_{k >= 2, tau_k < i} gamma_{i - tau_k},
//
// where tau_k are past selection times and gamma_j = 0 for j <= 0. Every
// prefix then satisfies sum(alpha_i) <= alpha * max(#selections, 1).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace ofcr {

/// gamma(j) = 0.0722 log(max(j,2)) / (j exp(sqrt(log j))), zero for j <= 0.
inline double gamma_default(long long j) {
  if (j <= 0) return 0.0;
  const double x = static_cast<double>(j);
  return 0.0722 * std::log(std::max(x, 2.0)) / (x * std::exp(std::sqrt(std::log(x))));
}

/// Nonincreasing nonnegative weights gamma_1, gamma_2, ... with sum <= 1.
/// Values up to the horizon are memoized; a generator, when present, serves
/// indices past the horizon.
class GammaSequence {
 public:
  static GammaSequence default_lord(std::size_t horizon) {
    GammaSequence g;
    g.values_.resize(horizon);
    for (std::size_t j = 1; j <= horizon; ++j) g.values_[j - 1] = gamma_default(static_cast<long long>(j));
    g.generator_ = gamma_default;
    g.name_ = "default";
    return g;
  }

  /// Explicit weights; validated nonincreasing, nonnegative, summing to at most 1.
  static GammaSequence from_values(std::vector<double> values) {
    double sum = 0.0;
    for (std::size_t j = 0; j < values.size(); ++j) {
      if (!(values[j] >= 0.0)) throw std::invalid_argument("gamma weights must be nonnegative");
      if (j > 0 && values[j] > values[j - 1]) throw std::invalid_argument("gamma weights must be nonincreasing");
      sum += values[j];
    }
    if (sum > 1.0 + 1e-12) throw std::invalid_argument("gamma weights sum to more than one");
    GammaSequence g;
    g.values_ = std::move(values);
    g.name_ = "explicit";
    return g;
  }

  double operator()(long long j) const {
    if (j <= 0) return 0.0;
    const auto u = static_cast<std::size_t>(j);
    if (u <= values_.size()) return values_[u - 1];
    if (generator_) return generator_(j);
    return 0.0;  // explicit sequences are padded with zeros
  }

  std::size_t horizon() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  const std::string& name() const { return name_; }

 private:
  std::vector<double> values_;
  std::function<double(long long)> generator_;
  std::string name_;
};

/// alpha * gamma_j: a fixed schedule with total spend at most alpha.
inline double alpha_spending_level(long long j, double alpha, const GammaSequence& gamma) {
  if (j < 1) throw std::invalid_argument("alpha-spending index must be positive");
  return alpha * gamma(j);
}

namespace detail {
// Neumaier's variant of compensated summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};
}  // namespace detail

class LordCiScheduler {
 public:
  LordCiScheduler(double alpha, double w0, std::shared_ptr<const GammaSequence> gamma)
      : alpha_(alpha), w0_(w0), gamma_(std::move(gamma)) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
    if (!(w0 > 0.0 && w0 < alpha)) throw std::invalid_argument("w0 must lie in (0, alpha)");
    if (!gamma_) throw std::invalid_argument("missing gamma sequence");
  }

  /// Default configuration: W0 = alpha / 2 and the default gamma sequence.
  static LordCiScheduler with_defaults(double alpha, std::size_t horizon) {
    return {alpha, alpha / 2.0, std::make_shared<const GammaSequence>(GammaSequence::default_lord(horizon))};
  }

  /// Level for the current time; depends only on past selections.
  double next_level() const { return level_at(1.0); }

  /// Decaying-memory variant: the initial wealth term is scaled by
  /// decay^(i-1) and each selection credit by decay^(i - tau_k).
  /// decay = 1 gives next_level() exactly.
  double mem_next_level(double decay) const {
    if (!(decay > 0.0 && decay <= 1.0)) throw std::invalid_argument("decay must lie in (0,1]");
    return level_at(decay);
  }

  /// Consume the decision for time `index` (must equal time()).
  void record_decision(std::size_t index, bool selected) { record_decision(index, selected, next_level()); }

  /// As above, with the level already issued for this time.
  void record_decision(std::size_t index, bool selected, double issued_level) {
    if (index != time_) {
      throw std::logic_error("double advance: decision for time " + std::to_string(index) +
                             " recorded at time " + std::to_string(time_));
    }
    spent_.add(issued_level);
    if (selected) selection_times_.push_back(time_);
    ++time_;
  }

  double alpha() const { return alpha_; }
  double w0() const { return w0_; }
  std::size_t time() const { return time_; }
  const std::vector<std::size_t>& selection_times() const { return selection_times_; }
  std::size_t n_selected() const { return selection_times_.size(); }
  double spent() const { return spent_.value(); }
  const GammaSequence& gamma() const { return *gamma_; }
  std::shared_ptr<const GammaSequence> gamma_ptr() const { return gamma_; }

  /// Selection indicators S_1..S_{time-1}.
  std::vector<bool> history() const {
    std::vector<bool> h(time_ - 1, false);
    for (auto t : selection_times_) h[t - 1] = true;
    return h;
  }

  /// Rebuild a state from a snapshot's fields.
  static LordCiScheduler restore(double alpha, double w0, std::shared_ptr<const GammaSequence> gamma,
                                 std::size_t time, std::vector<std::size_t> selection_times, double spent) {
    LordCiScheduler s(alpha, w0, std::move(gamma));
    if (time < 1) throw std::invalid_argument("snapshot time must be positive");
    for (std::size_t k = 0; k < selection_times.size(); ++k) {
      if (selection_times[k] < 1 || selection_times[k] >= time ||
          (k > 0 && selection_times[k] <= selection_times[k - 1])) {
        throw std::invalid_argument("snapshot selection times must be increasing and before the current time");
      }
    }
    s.time_ = time;
    s.selection_times_ = std::move(selection_times);
    s.spent_.add(spent);
    return s;
  }

 private:
  double level_at(double decay) const {
    const auto i = static_cast<long long>(time_);
    const GammaSequence& g = *gamma_;
    detail::CompensatedSum sum;
    const double w0_weight = decay == 1.0 ? 1.0 : std::pow(decay, static_cast<double>(i - 1));
    sum.add(g(i) * w0_ * w0_weight);
    for (std::size_t k = 0; k < selection_times_.size(); ++k) {
      const long long lag = i - static_cast<long long>(selection_times_[k]);
      const double credit = k == 0 ? alpha_ - w0_ : alpha_;
      const double w = decay == 1.0 ? 1.0 : std::pow(decay, static_cast<double>(lag));
      sum.add(credit * g(lag) * w);
    }
    return sum.value();
  }

  double alpha_;
  double w0_;
  std::shared_ptr<const GammaSequence> gamma_;
  std::size_t time_ = 1;
  std::vector<std::size_t> selection_times_;
  detail::CompensatedSum spent_;
};

}  // namespace ofcr
