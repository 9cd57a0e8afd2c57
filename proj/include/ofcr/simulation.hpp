#pragma once

// Monte Carlo harness: synthetic parameter streams, replicated experiments
// comparing LORD-CI marginal intervals with conditional intervals on the
// same selections, and the iterated drop-and-readjust loop for conditional
// intervals after sign classification.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "ofcr/interval.hpp"
#include "ofcr/interval_rules.hpp"
#include "ofcr/metrics.hpp"
#include "ofcr/normal.hpp"
#include "ofcr/protocol.hpp"
#include "ofcr/rng.hpp"
#include "ofcr/scheduler.hpp"
#include "ofcr/selection.hpp"

namespace ofcr {

// ---------------------------------------------------------------------------
// Parameter streams

struct PointMass {
  double value = 0.0;
};
struct OnePlusPoisson {
  double rate = 1.0;
};

struct MixtureComponent {
  double weight = 0.0;
  std::variant<PointMass, OnePlusPoisson> kind;
};

struct MixtureSpec {
  std::vector<MixtureComponent> components;

  void validate() const {
    if (components.empty()) throw std::invalid_argument("mixture needs at least one component");
    double total = 0.0;
    for (const auto& c : components) {
      if (!(c.weight >= 0.0)) throw std::invalid_argument("mixture weights must be nonnegative");
      if (const auto* p = std::get_if<OnePlusPoisson>(&c.kind); p && !(p->rate > 0.0)) {
        throw std::invalid_argument("Poisson rate must be positive");
      }
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("mixture weights must sum to one");
  }

  double draw(rng::Philox4x32& g) const {
    const double u = g.uniform();
    double acc = 0.0;
    const MixtureComponent* pick = &components.back();
    for (const auto& c : components) {
      acc += c.weight;
      if (u < acc) {
        pick = &c;
        break;
      }
    }
    if (const auto* p = std::get_if<PointMass>(&pick->kind)) return p->value;
    return 1.0 + g.poisson(std::get<OnePlusPoisson>(pick->kind).rate);
  }

  /// +-1e-3 with probability 0.45 each, 1 + Pois(1) with probability 0.1.
  static MixtureSpec nearly_null_with_rare_signals() {
    return {{{0.45, PointMass{1e-3}}, {0.45, PointMass{-1e-3}}, {0.1, OnePlusPoisson{1.0}}}};
  }
};

inline std::vector<double> draw_thetas(const MixtureSpec& mix, std::size_t m, rng::Philox4x32& g) {
  mix.validate();
  std::vector<double> out(m);
  for (auto& t : out) t = mix.draw(g);
  return out;
}

inline std::vector<double> gen_thetas_61(std::size_t m, rng::Philox4x32& g) {
  return draw_thetas(MixtureSpec::nearly_null_with_rare_signals(), m, g);
}

/// theta_i = (-1)^i * 1e-3 with probability 0.8, else 2; i starts at 1.
inline std::vector<double> gen_thetas_62(std::size_t m, rng::Philox4x32& g) {
  std::vector<double> out(m);
  for (std::size_t i = 1; i <= m; ++i) {
    out[i - 1] = g.uniform() < 0.8 ? (i % 2 == 0 ? 1e-3 : -1e-3) : 2.0;
  }
  return out;
}

inline std::vector<double> draw_observations(const std::vector<double>& thetas, rng::Philox4x32& g) {
  std::vector<double> xs(thetas.size());
  for (std::size_t i = 0; i < thetas.size(); ++i) xs[i] = thetas[i] + g.normal();
  return xs;
}

// ---------------------------------------------------------------------------
// Worker pool

/// Thread count: ONLINE_FCR_THREADS if set, else `requested`, else the
/// hardware concurrency.
inline unsigned resolve_threads(unsigned requested) {
  if (const char* env = std::getenv("ONLINE_FCR_THREADS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw std::invalid_argument("ONLINE_FCR_THREADS must be a positive integer");
    return static_cast<unsigned>(v);
  }
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// out[r] = fn(r) for r < n. Work is handed out in index order; results land
/// in their own slots, so the output does not depend on the thread count.
template <class Result, class Fn>
std::vector<Result> parallel_map(std::size_t n, unsigned threads, const Fn& fn) {
  std::vector<std::optional<Result>> slots(n);
  std::size_t next = 0;
  std::mutex mu;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      std::size_t r = 0;
      {
        std::lock_guard lock(mu);
        if (next >= n || failure) return;
        r = next++;
      }
      try {
        slots[r].emplace(fn(r));
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  const unsigned k = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (k == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < k; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<Result> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// ---------------------------------------------------------------------------
// Replicated scheme comparison

enum class Scheme { fixed_threshold, sgn_det_symm, sgn_det_mqc };

inline const std::vector<std::string>& scheme_names() {
  static const std::vector<std::string> names = {"fixed-threshold", "sgn-det-symm", "sgn-det-mqc"};
  return names;
}

inline std::string to_string(Scheme s) { return scheme_names()[static_cast<std::size_t>(s)]; }

inline Scheme parse_scheme(const std::string& name) {
  const auto& names = scheme_names();
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] == name) return static_cast<Scheme>(k);
  }
  std::string list;
  for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown scheme '" + name + "' (valid: " + list + ")");
}

struct ExperimentConfig {
  Scheme scheme = Scheme::fixed_threshold;
  double alpha = 0.1;
  std::size_t m = 10000;
  std::size_t n_reps = 2000;
  std::uint64_t seed = 7;
  double threshold = 3.0;  // fixed-threshold scheme
  double psi = 0.7;  // MQC scheme
  unsigned threads = 0;
  MixtureSpec mixture = MixtureSpec::nearly_null_with_rare_signals();

  void validate() const {
    if (m < 1 || n_reps < 1) throw std::invalid_argument("m and n_reps must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
    mixture.validate();
  }
};

/// Protocol for a scheme: the selection rule, with LORD-CI marginal intervals
/// from the selection's own rule (symmetric for the fixed threshold).
inline ProtocolConfig protocol_for(const ExperimentConfig& cfg) {
  RuleSpec sel;
  MarginalRuleSpec rule = MarginalRuleSpec::symmetric();
  switch (cfg.scheme) {
    case Scheme::fixed_threshold: sel = FixedThreshold{cfg.threshold, true}; break;
    case Scheme::sgn_det_symm: sel = SignDetermining{rule, 0.0}; break;
    case Scheme::sgn_det_mqc:
      rule = MarginalRuleSpec::mqc(cfg.psi);
      sel = SignDetermining{rule, 0.0};
      break;
  }
  return ProtocolConfig::defaults(cfg.alpha, sel, LordCiMarginal{rule}, cfg.m);
}

/// One row of a replication dump.
struct TraceRow {
  std::size_t index = 0;
  double theta = 0.0;
  double x = 0.0;
  double level = 0.0;
  bool selected = false;
  std::optional<Interval> lord_ci;
  std::optional<Interval> conditional;
  std::optional<double> cutoff;  // truncation cutoff of the conditional law
};

struct ReplicationResult {
  RateCounts lord_ci;
  RateCounts conditional;
  std::size_t lord_ci_sign_determining = 0;
  std::size_t conditional_sign_determining = 0;
  std::size_t domination_violations = 0;  // false sign without miscoverage
  std::size_t superset_violations = 0;  // MQC scheme only: symmetric-selected but not MQC-selected
  std::vector<TraceRow> trace;  // filled for replication 0 only
};

struct ModeSummary {
  AggregateReport rates;
  Estimate sign_determining_fraction;  // mean over replications of (#sign-determining / #selected)
};

struct ReplicationSummary {
  std::string scheme;
  double alpha = 0.0;
  std::size_t m = 0;
  std::size_t n_reps = 0;
  std::uint64_t seed = 0;
  ModeSummary lord_ci;
  ModeSummary conditional;
  std::size_t domination_violations = 0;
  std::size_t superset_violations = 0;
  std::size_t lord_ci_not_sign_determining = 0;  // selected LORD-CI intervals that straddle zero, all reps
};

struct ExperimentResult {
  ReplicationSummary summary;
  std::vector<TraceRow> trace_rep0;
};

namespace detail {

inline void tally(RateCounts& c, std::size_t& sign_det, const Interval& iv, double theta) {
  ++c.selected;
  const bool miss = !iv.contains(theta);
  if (miss) ++c.miscovered;
  const int d = sign_of_interval(iv, 0.0);
  if (d != 0) {
    ++sign_det;
    ++c.total_signs;
    if ((d == 1 && theta <= 0.0) || (d == -1 && theta > 0.0)) ++c.false_signs;
  }
}

inline bool false_sign(const Interval& iv, double theta) {
  const int d = sign_of_interval(iv, 0.0);
  return (d == 1 && theta <= 0.0) || (d == -1 && theta > 0.0);
}

}  // namespace detail

inline ReplicationResult run_replication(const ExperimentConfig& cfg, const ProtocolConfig& proto_cfg,
                                         std::size_t rep, bool keep_trace) {
  rng::Philox4x32 g(cfg.seed, rep);
  const std::vector<double> thetas = draw_thetas(cfg.mixture, cfg.m, g);
  const std::vector<double> xs = draw_observations(thetas, g);

  ReplicationResult out;
  OnlineProtocol proto(proto_cfg);
  // The symmetric-equipped procedure on the same stream, for the superset check.
  std::optional<OnlineProtocol> symm;
  if (cfg.scheme == Scheme::sgn_det_mqc) {
    ProtocolConfig s = proto_cfg;
    s.selection = SignDetermining{MarginalRuleSpec::symmetric(), 0.0};
    s.interval_mode = LordCiMarginal{MarginalRuleSpec::symmetric()};
    symm.emplace(s);
  }

  for (std::size_t i = 0; i < cfg.m; ++i) {
    const Commitment c = proto.commit();
    const StepOutcome step = proto.observe(c.token, xs[i]);
    out.lord_ci.spent += step.level;
    out.conditional.spent += step.level;
    TraceRow row;
    if (keep_trace) {
      row.index = step.index;
      row.theta = thetas[i];
      row.x = xs[i];
      row.level = step.level;
      row.selected = step.selected;
    }
    if (step.selected) {
      const double theta = thetas[i];
      const Interval& lord = *step.interval;
      const TruncationContext ctx = truncation_for(proto_cfg.selection, step.level);
      const Interval cond = conditional_truncated_interval(xs[i], ctx, cfg.alpha);
      detail::tally(out.lord_ci, out.lord_ci_sign_determining, lord, theta);
      detail::tally(out.conditional, out.conditional_sign_determining, cond, theta);
      if (detail::false_sign(lord, theta) && lord.contains(theta)) ++out.domination_violations;
      if (detail::false_sign(cond, theta) && cond.contains(theta)) ++out.domination_violations;
      if (keep_trace) {
        row.lord_ci = lord;
        row.conditional = cond;
        row.cutoff = ctx.c;
      }
    }
    if (symm) {
      const Commitment cs = symm->commit();
      const StepOutcome ss = symm->observe(cs.token, xs[i]);
      if (ss.selected && !step.selected) ++out.superset_violations;
    }
    if (keep_trace) out.trace.push_back(std::move(row));
  }
  return out;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const ProtocolConfig proto_cfg = protocol_for(cfg);
  auto reps = parallel_map<ReplicationResult>(cfg.n_reps, resolve_threads(cfg.threads), [&](std::size_t r) {
    return run_replication(cfg, proto_cfg, r, r == 0);
  });

  ExperimentResult result;
  ReplicationSummary& s = result.summary;
  s.scheme = to_string(cfg.scheme);
  s.alpha = cfg.alpha;
  s.m = cfg.m;
  s.n_reps = cfg.n_reps;
  s.seed = cfg.seed;
  std::vector<RateReport> lord, cond;
  std::vector<double> lord_frac, cond_frac;
  for (const auto& r : reps) {
    lord.push_back(rate_report(r.lord_ci));
    cond.push_back(rate_report(r.conditional));
    const double n = static_cast<double>(r.lord_ci.selected);
    lord_frac.push_back(detail::ratio_or_zero(static_cast<double>(r.lord_ci_sign_determining), n));
    cond_frac.push_back(detail::ratio_or_zero(static_cast<double>(r.conditional_sign_determining), n));
    s.domination_violations += r.domination_violations;
    s.superset_violations += r.superset_violations;
    s.lord_ci_not_sign_determining += r.lord_ci.selected - r.lord_ci_sign_determining;
  }
  s.lord_ci = {aggregate_rates(lord), detail::mean_and_se(lord_frac)};
  s.conditional = {aggregate_rates(cond), detail::mean_and_se(cond_frac)};
  result.trace_rep0 = std::move(reps.front().trace);
  return result;
}

// ---------------------------------------------------------------------------
// Conditional intervals after sign classification: drop the ones that cross
// zero, re-adjust the survivors for the extra selection, repeat.

struct InconsistencyConfig {
  double alpha = 0.1;
  std::size_t m = 10000;
  std::size_t n_reps = 500;
  std::uint64_t seed = 11;
  std::size_t max_iterations = 50;
  unsigned threads = 0;
};

struct InconsistencyIteration {
  std::size_t n_intervals = 0;
  std::size_t n_miscovered = 0;
  std::size_t n_crossing_zero = 0;
  std::size_t n_kept = 0;  // intervals that do not cross zero
  std::size_t n_kept_miscovered = 0;  // among those, before re-adjustment
};

/// One conditional interval in one iteration (kept for the panel dump).
struct InconsistencyInterval {
  std::size_t iteration = 0;  // 1-based
  std::size_t index = 0;  // 1-based stream index
  double theta = 0.0;
  double x = 0.0;
  Interval interval;
  double cutoff = 0.0;
  bool kept = false;
};

struct InconsistencyRun {
  std::vector<InconsistencyIteration> iterations;
  std::vector<InconsistencyInterval> panel;  // filled on request
  std::vector<std::size_t> final_survivors;  // 1-based stream indices
  std::size_t lord_ci_selected = 0;
  std::size_t lord_ci_crossing_zero = 0;
  std::size_t lord_ci_miscovered = 0;
};

struct IterationReport {
  std::size_t n_reps = 0;
  std::vector<double> mean_intervals;  // by iteration; runs that stopped contribute their final count
  Estimate fcp_initial;  // conditional CIs for all rejections
  Estimate fcp_after_drop;  // original CIs that do not cross zero
  Estimate fcp_readjusted;  // survivors re-adjusted once
  Estimate final_survivors;
  Estimate lord_ci_fcp;
  std::size_t nonmonotone_runs = 0;
  std::size_t lord_ci_crossing_zero = 0;
  InconsistencyRun rep0;
};

/// Cutoff d with Q(d) = level * Q(c): for x beyond the two-sided cutoff c the
/// conditional interval at `level` excludes zero exactly when |x| > d.
inline double zero_exclusion_cutoff(double c, double level) {
  return normal::upper_quantile(level * normal::upper_tail(c));
}

inline InconsistencyRun inconsistency_run(const InconsistencyConfig& cfg, std::size_t rep, bool keep_detail = false) {
  rng::Philox4x32 g(cfg.seed, rep);
  const std::vector<double> thetas = gen_thetas_62(cfg.m, g);
  const std::vector<double> xs = draw_observations(thetas, g);

  // LORD++ on two-sided p-values, i.e. sign-determining symmetric LORD-CI.
  const MarginalRuleSpec symm = MarginalRuleSpec::symmetric();
  const ProtocolConfig pc =
      ProtocolConfig::defaults(cfg.alpha, SignDetermining{symm, 0.0}, LordCiMarginal{symm}, cfg.m);
  const RunLog log = run_stream(pc, xs);

  InconsistencyRun run;
  struct Item {
    std::size_t i;  // 0-based
    double cutoff;
  };
  std::vector<Item> current;
  for (const auto& s : log.steps) {
    if (!s.selected) continue;
    ++run.lord_ci_selected;
    if (sign_of_interval(*s.interval) == 0) ++run.lord_ci_crossing_zero;
    if (!s.interval->contains(thetas[s.index - 1])) ++run.lord_ci_miscovered;
    current.push_back({s.index - 1, normal::upper_quantile(s.level / 2.0)});
  }

  for (std::size_t it = 0; it < cfg.max_iterations && !current.empty(); ++it) {
    InconsistencyIteration rec;
    rec.n_intervals = current.size();
    std::vector<Item> kept;
    for (const auto& item : current) {
      const double x = xs[item.i];
      const double theta = thetas[item.i];
      const Interval iv = conditional_truncated_interval(x, TruncationContext::two_sided(item.cutoff), cfg.alpha);
      const bool miss = !iv.contains(theta);
      if (miss) ++rec.n_miscovered;
      // Zero membership is decided by the acceptance region at theta = 0
      // directly, not by the numerically inverted endpoints.
      const double d = zero_exclusion_cutoff(item.cutoff, cfg.alpha);
      if (keep_detail) run.panel.push_back({it + 1, item.i + 1, theta, x, iv, item.cutoff, std::abs(x) > d});
      if (std::abs(x) > d) {
        ++rec.n_kept;
        if (miss) ++rec.n_kept_miscovered;
        kept.push_back({item.i, d});
      } else {
        ++rec.n_crossing_zero;
      }
    }
    run.iterations.push_back(rec);
    const bool fixed_point = rec.n_crossing_zero == 0;
    current = std::move(kept);
    if (fixed_point) break;
  }
  for (const auto& item : current) run.final_survivors.push_back(item.i + 1);
  return run;
}

inline IterationReport inconsistency_demo(const InconsistencyConfig& cfg) {
  if (cfg.m < 1 || cfg.n_reps < 1) throw std::invalid_argument("m and n_reps must be positive");
  auto runs = parallel_map<InconsistencyRun>(cfg.n_reps, resolve_threads(cfg.threads),
                                             [&](std::size_t r) { return inconsistency_run(cfg, r, r == 0); });
  IterationReport rep;
  rep.n_reps = runs.size();
  std::size_t depth = 0;
  for (const auto& r : runs) depth = std::max(depth, r.iterations.size());
  rep.mean_intervals.assign(depth, 0.0);
  std::vector<double> f0, fdrop, fre, surv, lord;
  for (const auto& r : runs) {
    for (std::size_t k = 0; k < depth; ++k) {
      double count = 0.0;
      if (k < r.iterations.size()) {
        count = static_cast<double>(r.iterations[k].n_intervals);
      } else if (!r.iterations.empty()) {
        count = static_cast<double>(r.iterations.back().n_kept);
      }
      rep.mean_intervals[k] += count / static_cast<double>(runs.size());
    }
    bool monotone = true;
    for (std::size_t k = 1; k < r.iterations.size(); ++k) {
      if (r.iterations[k].n_intervals > r.iterations[k - 1].n_intervals) monotone = false;
    }
    if (!monotone) ++rep.nonmonotone_runs;
    rep.lord_ci_crossing_zero += r.lord_ci_crossing_zero;
    if (!r.iterations.empty()) {
      const auto& first = r.iterations.front();
      f0.push_back(detail::ratio_or_zero(static_cast<double>(first.n_miscovered),
                                         static_cast<double>(first.n_intervals)));
      fdrop.push_back(detail::ratio_or_zero(static_cast<double>(first.n_kept_miscovered),
                                            static_cast<double>(first.n_kept)));
      if (r.iterations.size() > 1) {
        const auto& second = r.iterations[1];
        fre.push_back(detail::ratio_or_zero(static_cast<double>(second.n_miscovered),
                                            static_cast<double>(second.n_intervals)));
      }
    }
    surv.push_back(static_cast<double>(r.final_survivors.size()));
    lord.push_back(detail::ratio_or_zero(static_cast<double>(r.lord_ci_miscovered),
                                         static_cast<double>(r.lord_ci_selected)));
  }
  rep.fcp_initial = detail::mean_and_se(f0);
  rep.fcp_after_drop = detail::mean_and_se(fdrop);
  rep.fcp_readjusted = detail::mean_and_se(fre);
  rep.final_survivors = detail::mean_and_se(surv);
  rep.lord_ci_fcp = detail::mean_and_se(lord);
  rep.rep0 = std::move(runs.front());
  return rep;
}

}  // namespace ofcr
