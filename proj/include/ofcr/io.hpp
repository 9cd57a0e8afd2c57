#pragma once

// Serialization: JSON configs (versioned, unknown keys rejected), scheduler
// snapshots, run logs as JSON lines and CSV, and the simulation outputs.
//
// Infinite endpoints are written as the strings "inf" / "-inf" in JSON and
// as inf / -inf in CSV. CSV numbers use 17 significant digits.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ofcr/interval.hpp"
#include "ofcr/interval_rules.hpp"
#include "ofcr/posthoc.hpp"
#include "ofcr/protocol.hpp"
#include "ofcr/scheduler.hpp"
#include "ofcr/selection.hpp"
#include "ofcr/simulation.hpp"

namespace ofcr::io {

using nlohmann::json;

inline constexpr int kConfigVersion = 1;

/// Config errors; the CLI maps these to exit code 2.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Small helpers

inline std::string fmt17(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline json number_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

namespace detail {

inline void require_object(const json& j, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + " must be a JSON object");
}

inline void check_keys(const json& j, const std::string& what, std::initializer_list<const char*> allowed) {
  require_object(j, what);
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) throw ConfigError("unknown key '" + k + "' in " + what);
  }
}

inline const json& need(const json& j, const char* key, const std::string& what) {
  if (!j.contains(key)) throw ConfigError("missing key '" + std::string(key) + "' in " + what);
  return j.at(key);
}

inline double get_number(const json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  throw ConfigError(what + " must be a number");
}

inline bool get_bool(const json& j, const std::string& what) {
  if (!j.is_boolean()) throw ConfigError(what + " must be a boolean");
  return j.get<bool>();
}

inline std::string get_string(const json& j, const std::string& what) {
  if (!j.is_string()) throw ConfigError(what + " must be a string");
  return j.get<std::string>();
}

inline std::size_t get_count(const json& j, const std::string& what) {
  if (!j.is_number_integer() || j.get<long long>() < 0) throw ConfigError(what + " must be a nonnegative integer");
  return j.get<std::size_t>();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Intervals and interval sets: {lo, hi, lo_open, hi_open}

inline json to_json(const Interval& iv) {
  if (iv.is_empty()) return nullptr;
  return {{"lo", number_json(iv.lo())},
          {"hi", number_json(iv.hi())},
          {"lo_open", iv.lo_open()},
          {"hi_open", iv.hi_open()}};
}

inline Interval interval_from_json(const json& j) {
  detail::check_keys(j, "interval", {"lo", "hi", "lo_open", "hi_open"});
  try {
    return Interval(detail::get_number(detail::need(j, "lo", "interval"), "lo"),
                    detail::get_number(detail::need(j, "hi", "interval"), "hi"),
                    j.contains("lo_open") ? detail::get_bool(j["lo_open"], "lo_open") : false,
                    j.contains("hi_open") ? detail::get_bool(j["hi_open"], "hi_open") : false);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

inline json to_json(const IntervalSet& s) {
  json a = json::array();
  for (const auto& p : s.pieces()) a.push_back(to_json(p));
  return a;
}

inline IntervalSet interval_set_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("interval set must be an array of intervals");
  std::vector<Interval> pieces;
  for (const auto& e : j) pieces.push_back(interval_from_json(e));
  return IntervalSet(pieces);
}

// ---------------------------------------------------------------------------
// Rules

inline json to_json(const MarginalRuleSpec& r) {
  json j = {{"rule", to_string(r.kind)}};
  if (r.kind == MarginalKind::mqc) j["psi"] = r.psi;
  return j;
}

inline MarginalRuleSpec marginal_rule_from_json(const json& j) {
  detail::check_keys(j, "marginal rule", {"rule", "psi"});
  const std::string kind = detail::get_string(detail::need(j, "rule", "marginal rule"), "rule");
  MarginalRuleSpec r;
  if (kind == "symmetric") {
    r = MarginalRuleSpec::symmetric();
  } else if (kind == "one_sided") {
    r = MarginalRuleSpec::one_sided();
  } else if (kind == "mqc") {
    r = {MarginalKind::mqc, j.contains("psi") ? detail::get_number(j["psi"], "psi") : 0.7};
  } else {
    throw ConfigError("unknown marginal rule '" + kind + "' (valid: symmetric, one_sided, mqc)");
  }
  if (kind != "mqc" && j.contains("psi")) throw ConfigError("psi is only valid for the mqc rule");
  try {
    r.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return r;
}

inline json to_json(const RuleSpec& spec) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, FixedThreshold>) {
          return {{"kind", "fixed_threshold"}, {"threshold", s.threshold}, {"two_sided", s.two_sided}};
        } else if constexpr (std::is_same_v<T, SignDetermining>) {
          return {{"kind", "sign_determining"}, {"rule", to_json(s.rule)}, {"null_value", s.null_value}};
        } else if constexpr (std::is_same_v<T, Localization>) {
          json targets = json::array();
          for (const auto& t : s.targets) targets.push_back(to_json(t));
          return {{"kind", "localization"}, {"rule", to_json(s.rule)}, {"targets", targets}};
        } else {
          return {{"kind", "composite"}, {"rule", to_json(s.rule)}, {"null_set", to_json(s.null_set)}};
        }
      },
      spec);
}

inline RuleSpec rule_spec_from_json(const json& j) {
  detail::require_object(j, "selection");
  const std::string kind = detail::get_string(detail::need(j, "kind", "selection"), "selection kind");
  RuleSpec spec;
  if (kind == "fixed_threshold") {
    detail::check_keys(j, "selection", {"kind", "threshold", "two_sided"});
    FixedThreshold f;
    if (j.contains("threshold")) f.threshold = detail::get_number(j["threshold"], "threshold");
    if (j.contains("two_sided")) f.two_sided = detail::get_bool(j["two_sided"], "two_sided");
    spec = f;
  } else if (kind == "sign_determining") {
    detail::check_keys(j, "selection", {"kind", "rule", "null_value"});
    SignDetermining s;
    if (j.contains("rule")) s.rule = marginal_rule_from_json(j["rule"]);
    if (j.contains("null_value")) s.null_value = detail::get_number(j["null_value"], "null_value");
    spec = s;
  } else if (kind == "localization") {
    detail::check_keys(j, "selection", {"kind", "rule", "targets"});
    Localization l;
    if (j.contains("rule")) l.rule = marginal_rule_from_json(j["rule"]);
    const json& t = detail::need(j, "targets", "selection");
    if (!t.is_array() || t.empty()) throw ConfigError("targets must be a nonempty array of interval sets");
    for (const auto& e : t) l.targets.push_back(interval_set_from_json(e));
    spec = l;
  } else if (kind == "composite") {
    detail::check_keys(j, "selection", {"kind", "rule", "null_set"});
    CompositeTest c;
    if (j.contains("rule")) c.rule = marginal_rule_from_json(j["rule"]);
    c.null_set = interval_set_from_json(detail::need(j, "null_set", "selection"));
    spec = c;
  } else {
    throw ConfigError("unknown selection kind '" + kind +
                      "' (valid: fixed_threshold, sign_determining, localization, composite)");
  }
  try {
    validate(spec);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return spec;
}

/// {"rule": "symmetric" | "one_sided" | "mqc", ...} or
/// {"rule": "conditional", "shape": "two_sided" | "right_tail"}.
inline IntervalMode interval_mode_from_json(const json& j) {
  detail::require_object(j, "interval");
  const std::string kind = detail::get_string(detail::need(j, "rule", "interval"), "interval rule");
  if (kind == "conditional") {
    detail::check_keys(j, "interval", {"rule", "shape"});
    return ConditionalAtNominal{};
  }
  return LordCiMarginal{marginal_rule_from_json(j)};
}

inline json to_json(const IntervalMode& m, const RuleSpec& selection) {
  if (const auto* lm = std::get_if<LordCiMarginal>(&m)) return to_json(lm->rule);
  const TruncationContext ctx = truncation_for(selection, 0.05);
  return {{"rule", "conditional"},
          {"shape", ctx.shape == TruncationContext::Shape::two_sided ? "two_sided" : "right_tail"}};
}

// ---------------------------------------------------------------------------
// Scheduler snapshots: {alpha, w0, time, selection_times, spent}

inline json snapshot_to_json(const LordCiScheduler& s) {
  return {{"alpha", s.alpha()},
          {"w0", s.w0()},
          {"time", s.time()},
          {"selection_times", s.selection_times()},
          {"spent", s.spent()}};
}

inline LordCiScheduler snapshot_from_json(const json& j, std::shared_ptr<const GammaSequence> gamma) {
  detail::check_keys(j, "state", {"alpha", "w0", "time", "selection_times", "spent"});
  const json& times = detail::need(j, "selection_times", "state");
  if (!times.is_array()) throw ConfigError("selection_times must be an array");
  std::vector<std::size_t> tau;
  for (const auto& t : times) tau.push_back(detail::get_count(t, "selection time"));
  try {
    return LordCiScheduler::restore(detail::get_number(detail::need(j, "alpha", "state"), "alpha"),
                                    detail::get_number(detail::need(j, "w0", "state"), "w0"), std::move(gamma),
                                    detail::get_count(detail::need(j, "time", "state"), "time"), std::move(tau),
                                    detail::get_number(detail::need(j, "spent", "state"), "spent"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

// ---------------------------------------------------------------------------
// Stream config

struct StreamConfig {
  ProtocolConfig protocol;
  std::optional<LordCiScheduler> resume;
};

inline std::shared_ptr<const GammaSequence> gamma_from_json(const json& j, std::size_t horizon) {
  detail::require_object(j, "gamma");
  const std::string kind = detail::get_string(detail::need(j, "kind", "gamma"), "gamma kind");
  try {
    if (kind == "default") {
      detail::check_keys(j, "gamma", {"kind"});
      return std::make_shared<const GammaSequence>(GammaSequence::default_lord(horizon));
    }
    if (kind == "explicit") {
      detail::check_keys(j, "gamma", {"kind", "values"});
      const json& v = detail::need(j, "values", "gamma");
      if (!v.is_array()) throw ConfigError("gamma values must be an array");
      std::vector<double> vals;
      for (const auto& e : v) vals.push_back(detail::get_number(e, "gamma value"));
      return std::make_shared<const GammaSequence>(GammaSequence::from_values(std::move(vals)));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("unknown gamma kind '" + kind + "' (valid: default, explicit)");
}

inline StreamConfig stream_config_from_json(const json& j) {
  detail::check_keys(j, "config", {"version", "alpha", "w0", "horizon", "selection", "interval", "gamma", "state"});
  const json& version = detail::need(j, "version", "config");
  if (!version.is_number_integer() || version.get<int>() != kConfigVersion) {
    throw ConfigError("unsupported config version (expected " + std::to_string(kConfigVersion) + ")");
  }
  StreamConfig sc;
  ProtocolConfig& p = sc.protocol;
  p.alpha = j.contains("alpha") ? detail::get_number(j["alpha"], "alpha") : 0.1;
  p.w0 = j.contains("w0") ? detail::get_number(j["w0"], "w0") : p.alpha / 2.0;
  p.horizon = j.contains("horizon") ? detail::get_count(j["horizon"], "horizon") : 10000;
  if (p.horizon < 1) throw ConfigError("horizon must be positive");
  p.selection = rule_spec_from_json(detail::need(j, "selection", "config"));
  p.interval_mode = j.contains("interval") ? interval_mode_from_json(j["interval"])
                                           : IntervalMode{LordCiMarginal{MarginalRuleSpec::symmetric()}};
  p.gamma = j.contains("gamma") ? gamma_from_json(j["gamma"], p.horizon)
                                : std::make_shared<const GammaSequence>(GammaSequence::default_lord(p.horizon));
  if (j.contains("interval") && j["interval"].contains("shape")) {
    const std::string shape = detail::get_string(j["interval"]["shape"], "shape");
    TruncationContext ctx;
    try {
      ctx = truncation_for(p.selection, 0.5 * p.alpha);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    const std::string implied = ctx.shape == TruncationContext::Shape::two_sided ? "two_sided" : "right_tail";
    if (shape != implied) throw ConfigError("interval shape '" + shape + "' disagrees with the selection rule ('" + implied + "')");
  }
  try {
    // Constructing a protocol validates alpha, w0 and the rule combination.
    OnlineProtocol probe(p);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (j.contains("state")) sc.resume = snapshot_from_json(j["state"], p.gamma);
  return sc;
}

inline json to_json(const ProtocolConfig& p) {
  return {{"version", kConfigVersion},
          {"alpha", p.alpha},
          {"w0", p.w0},
          {"horizon", p.horizon},
          {"selection", to_json(p.selection)},
          {"interval", to_json(p.interval_mode, p.selection)}};
}

// ---------------------------------------------------------------------------
// Run logs

inline json to_json(const StepOutcome& s) {
  json j = {{"index", s.index}, {"x", number_json(s.x)}, {"level", s.level}, {"selected", s.selected}};
  if (s.interval) {
    j["lo"] = number_json(s.interval->lo());
    j["hi"] = number_json(s.interval->hi());
    j["lo_open"] = s.interval->lo_open();
    j["hi_open"] = s.interval->hi_open();
  } else {
    j["lo"] = j["hi"] = j["lo_open"] = j["hi_open"] = nullptr;
  }
  j["sign"] = s.sign;
  j["strictly_negative"] = s.strictly_negative;
  j["localized_index"] = s.localized_index ? json(*s.localized_index) : json(nullptr);
  j["cutoff"] = s.truncation ? json(s.truncation->c) : json(nullptr);
  return j;
}

inline json stream_summary(const LordCiScheduler& state) {
  const double n_sel = static_cast<double>(state.n_selected());
  return {{"summary",
           {{"n", state.time() - 1},
            {"n_selected", state.n_selected()},
            {"spent", state.spent()},
            {"estimated_fcp", state.spent() / std::max(n_sel, 1.0)},
            {"state", snapshot_to_json(state)}}}};
}

inline void write_jsonl(std::ostream& out, const RunLog& log) {
  for (const auto& s : log.steps) out << to_json(s).dump() << '\n';
  out << stream_summary(log.final_state).dump() << '\n';
}

inline constexpr const char* kRunLogCsvHeader = "index,level,selected,lo,hi,sign,localized_index";

inline void write_csv_row(std::ostream& out, std::size_t index, double level, bool selected,
                          const std::optional<Interval>& iv, int sign, std::optional<int> localized) {
  out << index << ',' << fmt17(level) << ',' << (selected ? 1 : 0) << ',';
  if (iv && !iv->is_empty()) out << fmt17(iv->lo()) << ',' << fmt17(iv->hi());
  else out << ',';
  out << ',' << sign << ',';
  if (localized) out << *localized;
  out << '\n';
}

inline void write_csv(std::ostream& out, const RunLog& log) {
  out << kRunLogCsvHeader << '\n';
  for (const auto& s : log.steps) write_csv_row(out, s.index, s.level, s.selected, s.interval, s.sign, s.localized_index);
}

/// (level, selected) pairs from a run log in either format.
struct LevelTrace {
  std::vector<double> levels;
  std::vector<bool> selected;
};

inline LevelTrace read_level_trace(std::istream& in) {
  LevelTrace t;
  std::string line;
  std::size_t line_no = 0;
  bool csv = false;
  int level_col = -1;
  int sel_col = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.front() != '{') {
      csv = true;
      std::vector<std::string> cols;
      std::string cell;
      std::istringstream ss(line);
      while (std::getline(ss, cell, ',')) cols.push_back(cell);
      for (std::size_t k = 0; k < cols.size(); ++k) {
        if (cols[k] == "level") level_col = static_cast<int>(k);
        if (cols[k] == "selected") sel_col = static_cast<int>(k);
      }
      if (level_col < 0 || sel_col < 0) throw ConfigError("log CSV needs 'level' and 'selected' columns");
      continue;
    }
    if (csv) {
      std::vector<std::string> cells;
      std::string cell;
      std::istringstream ss(line);
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (static_cast<int>(cells.size()) <= std::max(level_col, sel_col)) {
        throw ConfigError("malformed log line " + std::to_string(line_no));
      }
      try {
        t.levels.push_back(std::stod(cells[static_cast<std::size_t>(level_col)]));
      } catch (const std::exception&) {
        throw ConfigError("malformed level on log line " + std::to_string(line_no));
      }
      const std::string& s = cells[static_cast<std::size_t>(sel_col)];
      if (s != "0" && s != "1") throw ConfigError("malformed selected flag on log line " + std::to_string(line_no));
      t.selected.push_back(s == "1");
      continue;
    }
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw ConfigError("malformed JSON on log line " + std::to_string(line_no));
    }
    if (j.contains("summary")) continue;
    if (!j.contains("level") || !j.contains("selected")) {
      throw ConfigError("log line " + std::to_string(line_no) + " lacks level/selected");
    }
    t.levels.push_back(detail::get_number(j["level"], "level"));
    t.selected.push_back(detail::get_bool(j["selected"], "selected"));
  }
  return t;
}

inline constexpr const char* kPosthocCsvHeader = "n,bound";

inline void write_posthoc_csv(std::ostream& out, const std::vector<BoundPoint>& pts) {
  out << kPosthocCsvHeader << '\n';
  for (const auto& p : pts) out << p.n << ',' << (p.bound.is_vacuous() ? std::string("vacuous") : fmt17(p.bound.value())) << '\n';
}

// ---------------------------------------------------------------------------
// Simulation outputs

inline json to_json(const Estimate& e) { return {{"value", e.value}, {"se", e.se}}; }

inline json to_json(const ModeSummary& m) {
  const AggregateReport& r = m.rates;
  return {{"n_reps_with_selection", r.n_reps_with_selection},
          {"fcr", to_json(r.fcr)},
          {"mfcr", to_json(r.mfcr)},
          {"pfcr", to_json(r.pfcr)},
          {"fsr", to_json(r.fsr)},
          {"mean_selected", to_json(r.mean_selected)},
          {"est_fcp", to_json(r.est_fcp)},
          {"sign_determining_fraction", to_json(m.sign_determining_fraction)}};
}

inline json to_json(const ReplicationSummary& s) {
  return {{"scheme", s.scheme},
          {"alpha", s.alpha},
          {"m", s.m},
          {"n_reps", s.n_reps},
          {"seed", s.seed},
          {"lord_ci", to_json(s.lord_ci)},
          {"conditional", to_json(s.conditional)},
          {"domination_violations", s.domination_violations},
          {"superset_violations", s.superset_violations},
          {"lord_ci_not_sign_determining", s.lord_ci_not_sign_determining}};
}

/// Rows are metrics; columns are scheme x interval mode.
inline void write_table1_csv(std::ostream& out, const std::vector<ReplicationSummary>& schemes) {
  out << "metric";
  for (const auto& s : schemes) out << ',' << s.scheme << ":lord-ci," << s.scheme << ":conditional";
  out << '\n';
  auto row = [&](const char* name, auto get) {
    out << name;
    for (const auto& s : schemes) out << ',' << fmt17(get(s.lord_ci)) << ',' << fmt17(get(s.conditional));
    out << '\n';
  };
  row("fcr", [](const ModeSummary& m) { return m.rates.fcr.value; });
  row("mfcr", [](const ModeSummary& m) { return m.rates.mfcr.value; });
  row("mean_selected", [](const ModeSummary& m) { return m.rates.mean_selected.value; });
  row("sign_determining_fraction", [](const ModeSummary& m) { return m.sign_determining_fraction.value; });
  row("pfcr", [](const ModeSummary& m) { return m.rates.pfcr.value; });
  row("fsr", [](const ModeSummary& m) { return m.rates.fsr.value; });
}

inline constexpr const char* kTraceCsvHeader =
    "scheme,index,theta,x,level,selected,lordci_lo,lordci_hi,cond_lo,cond_hi,cutoff";

inline void write_trace_csv(std::ostream& out, const std::string& scheme, const std::vector<TraceRow>& rows,
                            bool header = true) {
  if (header) out << kTraceCsvHeader << '\n';
  for (const auto& r : rows) {
    out << scheme << ',' << r.index << ',' << fmt17(r.theta) << ',' << fmt17(r.x) << ',' << fmt17(r.level) << ','
        << (r.selected ? 1 : 0) << ',';
    if (r.lord_ci) out << fmt17(r.lord_ci->lo()) << ',' << fmt17(r.lord_ci->hi());
    else out << ',';
    out << ',';
    if (r.conditional) out << fmt17(r.conditional->lo()) << ',' << fmt17(r.conditional->hi());
    else out << ',';
    out << ',';
    if (r.cutoff) out << fmt17(*r.cutoff);
    out << '\n';
  }
}

inline constexpr const char* kInconsistencyCsvHeader = "iteration,index,theta,x,lo,hi,cutoff,kept";

inline void write_inconsistency_csv(std::ostream& out, const InconsistencyRun& run) {
  out << kInconsistencyCsvHeader << '\n';
  for (const auto& d : run.panel) {
    out << d.iteration << ',' << d.index << ',' << fmt17(d.theta) << ',' << fmt17(d.x) << ',' << fmt17(d.interval.lo())
        << ',' << fmt17(d.interval.hi()) << ',' << fmt17(d.cutoff) << ',' << (d.kept ? 1 : 0) << '\n';
  }
}

inline constexpr const char* kEndpointsCsvHeader = "x,lo,hi,lo_open,hi_open";

/// Endpoints of a marginal rule on an equispaced x grid.
inline void write_endpoints_csv(std::ostream& out, const MarginalRuleSpec& rule, double level, double x_min,
                                double x_max, std::size_t steps) {
  if (steps < 2 || !(x_min < x_max)) throw ConfigError("endpoint grid needs x_min < x_max and at least 2 steps");
  const PreparedMarginalRule r(rule, level);
  out << kEndpointsCsvHeader << '\n';
  for (std::size_t k = 0; k < steps; ++k) {
    const double x = x_min + (x_max - x_min) * static_cast<double>(k) / static_cast<double>(steps - 1);
    const Interval iv = r(x);
    out << fmt17(x) << ',' << fmt17(iv.lo()) << ',' << fmt17(iv.hi()) << ',' << (iv.lo_open() ? 1 : 0) << ','
        << (iv.hi_open() ? 1 : 0) << '\n';
  }
}

inline json to_json(const IterationReport& r) {
  json iters = json::array();
  for (const auto& it : r.rep0.iterations) {
    iters.push_back({{"n_intervals", it.n_intervals},
                     {"n_miscovered", it.n_miscovered},
                     {"n_crossing_zero", it.n_crossing_zero},
                     {"n_kept", it.n_kept},
                     {"n_kept_miscovered", it.n_kept_miscovered}});
  }
  return {{"n_reps", r.n_reps},
          {"mean_intervals_by_iteration", r.mean_intervals},
          {"fcp_initial", to_json(r.fcp_initial)},
          {"fcp_after_drop", to_json(r.fcp_after_drop)},
          {"fcp_readjusted", to_json(r.fcp_readjusted)},
          {"final_survivors", to_json(r.final_survivors)},
          {"lord_ci_fcp", to_json(r.lord_ci_fcp)},
          {"nonmonotone_runs", r.nonmonotone_runs},
          {"lord_ci_crossing_zero", r.lord_ci_crossing_zero},
          {"rep0",
           {{"iterations", iters},
            {"final_survivors", r.rep0.final_survivors},
            {"lord_ci_selected", r.rep0.lord_ci_selected}}}};
}

}  // namespace ofcr::io
