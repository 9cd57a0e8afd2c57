#pragma once

// The online CI protocol: commit to a level and rules, observe x_i, then
// decide and report. The commit token makes it impossible to consume an
// observation before its level is fixed.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "ofcr/interval.hpp"
#include "ofcr/interval_rules.hpp"
#include "ofcr/normal.hpp"
#include "ofcr/scheduler.hpp"
#include "ofcr/selection.hpp"

namespace ofcr {

/// Report the marginal rule's interval at the committed level.
struct LordCiMarginal {
  MarginalRuleSpec rule;
};

/// Report the truncated-normal interval at the nominal alpha, conditioning on
/// the selection event implied by the committed rule.
struct ConditionalAtNominal {};

using IntervalMode = std::variant<LordCiMarginal, ConditionalAtNominal>;

struct ProtocolConfig {
  double alpha = 0.1;
  double w0 = 0.05;
  std::shared_ptr<const GammaSequence> gamma;
  RuleSpec selection = FixedThreshold{};
  IntervalMode interval_mode = LordCiMarginal{};
  std::size_t horizon = 10000;

  static ProtocolConfig defaults(double alpha, RuleSpec selection, IntervalMode mode, std::size_t horizon) {
    ProtocolConfig c;
    c.alpha = alpha;
    c.w0 = alpha / 2.0;
    c.gamma = std::make_shared<const GammaSequence>(GammaSequence::default_lord(horizon));
    c.selection = std::move(selection);
    c.interval_mode = mode;
    c.horizon = horizon;
    return c;
  }
};

/// Truncation event of a selection rule at a committed level, when the
/// conditional law is available: fixed thresholds, and sign-determining
/// selection about zero (which selects exactly when |x| exceeds the rule's
/// sign-determination cutoff).
inline TruncationContext truncation_for(const RuleSpec& spec, double level) {
  if (const auto* ft = std::get_if<FixedThreshold>(&spec)) {
    return ft->two_sided ? TruncationContext::two_sided(ft->threshold)
                         : TruncationContext::right_tail(ft->threshold);
  }
  if (const auto* sd = std::get_if<SignDetermining>(&spec)) {
    if (sd->null_value == 0.0) return TruncationContext::two_sided(sign_determination_threshold(sd->rule, level));
  }
  throw std::invalid_argument("conditional law unavailable for this selection rule");
}

struct StepOutcome {
  std::size_t index = 0;
  double x = 0.0;
  double level = 0.0;  // committed alpha_i
  bool selected = false;
  std::optional<Interval> interval;  // present iff selected
  int sign = 0;  // +1 if I in (0, inf), -1 if I in (-inf, 0], else 0
  bool strictly_negative = false;  // sign == -1 and I excludes zero
  std::optional<int> localized_index;
  std::optional<TruncationContext> truncation;  // conditional mode only
};

/// Sign decision of a reported interval relative to `reference`.
inline int sign_decision(const Interval& iv, double reference = 0.0) { return sign_of_interval(iv, reference); }

struct Commitment;

class CommitToken {
 public:
  std::size_t index() const { return index_; }

 private:
  friend class OnlineProtocol;
  CommitToken(std::size_t index, std::uint64_t serial) : index_(index), serial_(serial) {}
  std::size_t index_;
  std::uint64_t serial_;
};

struct Commitment {
  CommitToken token;
  double level;
  RuleSpec selection;
  IntervalMode interval_mode;
};

class OnlineProtocol {
 public:
  explicit OnlineProtocol(ProtocolConfig config)
      : config_(std::move(config)), scheduler_(config_.alpha, config_.w0, ensure_gamma(config_)) {
    validate(config_.selection);
    if (std::holds_alternative<ConditionalAtNominal>(config_.interval_mode)) {
      // Fails early for rules without a conditional law.
      (void)truncation_for(config_.selection, 0.5 * config_.alpha);
    } else {
      std::get<LordCiMarginal>(config_.interval_mode).rule.validate();
    }
  }

  /// Resume from a saved scheduler state; alpha and w0 must match the config.
  OnlineProtocol(ProtocolConfig config, const LordCiScheduler& state) : OnlineProtocol(std::move(config)) {
    if (state.alpha() != config_.alpha || state.w0() != config_.w0) {
      throw std::invalid_argument("snapshot alpha/w0 disagree with the configuration");
    }
    scheduler_ = LordCiScheduler::restore(state.alpha(), state.w0(), config_.gamma, state.time(),
                                          state.selection_times(), state.spent());
  }

  Commitment commit() {
    if (pending_) throw std::logic_error("commit called twice without observe");
    pending_ = true;
    pending_level_ = scheduler_.next_level();
    ++serial_;
    return {CommitToken(scheduler_.time(), serial_), pending_level_, config_.selection, config_.interval_mode};
  }

  StepOutcome observe(const CommitToken& token, double x) {
    if (!pending_ || token.serial_ != serial_ || token.index_ != scheduler_.time()) {
      throw std::logic_error("stale or duplicate commit token");
    }
    validate_observation(x);
    StepOutcome out;
    out.index = scheduler_.time();
    out.x = x;
    out.level = pending_level_;
    const SelectionOutcome sel = decide(config_.selection, x, pending_level_);
    out.selected = sel.selected;
    if (sel.selected) {
      double reference = 0.0;
      if (const auto* sd = std::get_if<SignDetermining>(&config_.selection)) reference = sd->null_value;
      if (const auto* marginal = std::get_if<LordCiMarginal>(&config_.interval_mode)) {
        out.interval = (sel.candidate && marginal->rule == candidate_rule())
                           ? *sel.candidate
                           : marginal_interval(marginal->rule, x, pending_level_);
      } else {
        const TruncationContext ctx = truncation_for(config_.selection, pending_level_);
        out.truncation = ctx;
        out.interval = conditional_truncated_interval(x, ctx, config_.alpha);
      }
      out.sign = sign_decision(*out.interval, reference);
      out.strictly_negative =
          out.sign == -1 && (out.interval->hi() < reference || out.interval->hi_open());
      out.localized_index = sel.localized_index;
    }
    scheduler_.record_decision(out.index, out.selected, pending_level_);
    pending_ = false;
    return out;
  }

  const LordCiScheduler& scheduler() const { return scheduler_; }
  const ProtocolConfig& config() const { return config_; }

 private:
  static std::shared_ptr<const GammaSequence> ensure_gamma(ProtocolConfig& c) {
    if (!c.gamma) c.gamma = std::make_shared<const GammaSequence>(GammaSequence::default_lord(c.horizon));
    return c.gamma;
  }

  std::optional<MarginalRuleSpec> candidate_rule() const {
    return std::visit(
        [](const auto& s) -> std::optional<MarginalRuleSpec> {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, FixedThreshold>) {
            return std::nullopt;
          } else {
            return s.rule;
          }
        },
        config_.selection);
  }

  ProtocolConfig config_;
  LordCiScheduler scheduler_;
  bool pending_ = false;
  double pending_level_ = 0.0;
  std::uint64_t serial_ = 0;
};

struct RunLog {
  std::vector<StepOutcome> steps;
  LordCiScheduler final_state;
};

inline RunLog run_stream(const ProtocolConfig& config, std::span<const double> observations) {
  OnlineProtocol proto(config);
  RunLog log{{}, proto.scheduler()};
  log.steps.reserve(observations.size());
  for (double x : observations) {
    const Commitment c = proto.commit();
    log.steps.push_back(proto.observe(c.token, x));
  }
  log.final_state = proto.scheduler();
  return log;
}

struct TestingRun {
  std::vector<bool> rejections;
  std::vector<double> levels;
};

/// LORD++ online testing: reject H_i iff p_i <= alpha_i, with the levels
/// driven by past rejections through the same scheduler.
inline TestingRun lordpp_testing_run(std::span<const double> pvalues, double alpha, double w0,
                                     std::shared_ptr<const GammaSequence> gamma) {
  LordCiScheduler sched(alpha, w0, std::move(gamma));
  TestingRun run;
  run.rejections.reserve(pvalues.size());
  run.levels.reserve(pvalues.size());
  for (double p : pvalues) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p-value outside [0,1]");
    const double level = sched.next_level();
    const bool reject = p <= level;
    run.levels.push_back(level);
    run.rejections.push_back(reject);
    sched.record_decision(sched.time(), reject, level);
  }
  return run;
}

/// 2(1 - Phi(|x|)).
inline double two_sided_pvalue(double x) { return 2.0 * normal::upper_tail(std::abs(x)); }
/// 1 - Phi(|x|).
inline double one_sided_pvalue(double x) { return normal::upper_tail(std::abs(x)); }

}  // namespace ofcr
