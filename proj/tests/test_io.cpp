#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "ofcr/io.hpp"

namespace ofcr::io {
namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Json, IntervalRoundTrip) {
  for (const Interval& iv : {Interval::open(-1.0, 2.0), Interval(-kInf, 0.0, true, false), Interval::point(3.0),
                             Interval::whole()}) {
    EXPECT_EQ(interval_from_json(to_json(iv)), iv);
  }
  EXPECT_TRUE(to_json(Interval::empty()).is_null());
  EXPECT_EQ(to_json(Interval::whole())["lo"], "-inf");
}

TEST(Json, IntervalErrors) {
  EXPECT_EQ(error_of([] { interval_from_json(json{{"lo", 0}, {"hi", 1}, {"open", true}}); }),
            "unknown key 'open' in interval");
  EXPECT_EQ(error_of([] { interval_from_json(json{{"hi", 1}}); }), "missing key 'lo' in interval");
  EXPECT_EQ(error_of([] { interval_from_json(json{{"lo", 2}, {"hi", 1}}); }),
            "interval lower endpoint exceeds upper endpoint");
  EXPECT_EQ(error_of([] { interval_from_json(json{{"lo", "x"}, {"hi", 1}}); }), "lo must be a number");
}

TEST(Json, RuleSpecRoundTrip) {
  const std::vector<RuleSpec> specs = {
      FixedThreshold{2.5, false},
      SignDetermining{MarginalRuleSpec::mqc(0.8), 0.0},
      SignDetermining{MarginalRuleSpec::one_sided(), 1.5},
      Localization{MarginalRuleSpec::symmetric(),
                   {IntervalSet{Interval(-kInf, 0.0, true, false)}, IntervalSet{Interval::open(1.0, kInf)}}},
      CompositeTest{MarginalRuleSpec::symmetric(), IntervalSet{Interval::closed(-1, 1), Interval::closed(3, 4)}},
  };
  for (const auto& s : specs) {
    const json j = to_json(s);
    EXPECT_EQ(to_json(rule_spec_from_json(j)), j) << j.dump();
  }
}

TEST(Json, RuleSpecErrors) {
  EXPECT_EQ(error_of([] { rule_spec_from_json(json{{"kind", "magic"}}); }),
            "unknown selection kind 'magic' (valid: fixed_threshold, sign_determining, localization, composite)");
  EXPECT_EQ(error_of([] { rule_spec_from_json(json{{"kind", "fixed_threshold"}, {"cutoff", 3}}); }),
            "unknown key 'cutoff' in selection");
  EXPECT_EQ(error_of([] { marginal_rule_from_json(json{{"rule", "symmetric"}, {"psi", 0.7}}); }),
            "psi is only valid for the mqc rule");
  EXPECT_NE(error_of([] { marginal_rule_from_json(json{{"rule", "mqc"}, {"psi", 0.4}}); }), "");
  EXPECT_EQ(error_of([] {
              rule_spec_from_json(json::parse(
                  R"({"kind":"localization","targets":[[{"lo":0,"hi":2}],[{"lo":1,"hi":3}]]})"));
            }),
            "localization targets must be pairwise disjoint");
}

TEST(Json, StreamConfigDefaults) {
  const auto sc = stream_config_from_json(json::parse(R"({"version":1,"selection":{"kind":"fixed_threshold"}})"));
  EXPECT_EQ(sc.protocol.alpha, 0.1);
  EXPECT_EQ(sc.protocol.w0, 0.05);
  EXPECT_EQ(sc.protocol.horizon, 10000u);
  EXPECT_TRUE(std::holds_alternative<LordCiMarginal>(sc.protocol.interval_mode));
  EXPECT_FALSE(sc.resume.has_value());
}

TEST(Json, StreamConfigErrors) {
  EXPECT_EQ(error_of([] { stream_config_from_json(json::parse(R"({"selection":{"kind":"fixed_threshold"}})")); }),
            "missing key 'version' in config");
  EXPECT_EQ(
      error_of([] { stream_config_from_json(json::parse(R"({"version":2,"selection":{"kind":"fixed_threshold"}})")); }),
      "unsupported config version (expected 1)");
  EXPECT_EQ(error_of([] {
              stream_config_from_json(json::parse(R"({"version":1,"extra":1,"selection":{"kind":"fixed_threshold"}})"));
            }),
            "unknown key 'extra' in config");
  EXPECT_NE(error_of([] {
              stream_config_from_json(
                  json::parse(R"({"version":1,"alpha":0.1,"w0":0.2,"selection":{"kind":"fixed_threshold"}})"));
            }),
            "");
  EXPECT_EQ(error_of([] {
              stream_config_from_json(json::parse(
                  R"({"version":1,"selection":{"kind":"fixed_threshold","two_sided":false},"interval":{"rule":"conditional","shape":"two_sided"}})"));
            }),
            "interval shape 'two_sided' disagrees with the selection rule ('right_tail')");
  EXPECT_EQ(error_of([] {
              stream_config_from_json(json::parse(
                  R"({"version":1,"selection":{"kind":"fixed_threshold"},"gamma":{"kind":"explicit","values":[0.5,0.6]}})"));
            }),
            "gamma weights must be nonincreasing");
}

TEST(Json, ProtocolConfigRoundTrip) {
  auto p = ProtocolConfig::defaults(0.2, SignDetermining{MarginalRuleSpec::mqc(0.75), 0.0}, ConditionalAtNominal{}, 50);
  const json j = to_json(p);
  const auto back = stream_config_from_json(j);
  EXPECT_EQ(to_json(back.protocol), j);
}

TEST(Json, SnapshotRoundTripResumes) {
  const auto p = ProtocolConfig::defaults(0.1, FixedThreshold{2.0, true}, LordCiMarginal{}, 100);
  const std::vector<double> xs = {0.1, 2.5, -3.0, 0.0, 1.0};
  const RunLog log = run_stream(p, xs);
  json cfg = to_json(p);
  cfg["state"] = snapshot_to_json(log.final_state);
  const auto sc = stream_config_from_json(cfg);
  ASSERT_TRUE(sc.resume.has_value());
  EXPECT_EQ(sc.resume->time(), 6u);
  EXPECT_EQ(sc.resume->selection_times(), (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(sc.resume->next_level(), log.final_state.next_level());
}

TEST(RunLog, JsonLinesAndSummary) {
  const auto p = ProtocolConfig::defaults(0.1, FixedThreshold{3.0, true}, LordCiMarginal{}, 10);
  const RunLog log = run_stream(p, std::vector<double>{0.5, 4.0});
  std::ostringstream out;
  write_jsonl(out, log);
  std::istringstream in(out.str());
  std::string line;
  std::vector<json> lines;
  while (std::getline(in, line)) lines.push_back(json::parse(line));
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0]["selected"], false);
  EXPECT_TRUE(lines[0]["lo"].is_null());
  EXPECT_EQ(lines[1]["selected"], true);
  EXPECT_EQ(lines[1]["lo_open"], true);
  EXPECT_EQ(lines[2]["summary"]["n"], 2);
  EXPECT_EQ(lines[2]["summary"]["n_selected"], 1);
}

TEST(RunLog, CsvGolden) {
  std::ostringstream out;
  out << kRunLogCsvHeader << '\n';
  write_csv_row(out, 1, 0.0025, false, std::nullopt, 0, std::nullopt);
  write_csv_row(out, 2, 0.5, true, Interval::open(1.0, 3.0), 1, 2);
  EXPECT_EQ(out.str(),
            "index,level,selected,lo,hi,sign,localized_index\n"
            "1,0.0025000000000000001,0,,,0,\n"
            "2,0.5,1,1,3,1,2\n");
}

TEST(RunLog, LevelTraceFromBothFormats) {
  const auto p = ProtocolConfig::defaults(0.1, FixedThreshold{3.0, true}, LordCiMarginal{}, 10);
  const RunLog log = run_stream(p, std::vector<double>{0.5, 4.0, -5.0, 1.0});
  std::ostringstream js;
  std::ostringstream cs;
  write_jsonl(js, log);
  write_csv(cs, log);
  for (const std::string& text : {js.str(), cs.str()}) {
    std::istringstream in(text);
    const auto t = read_level_trace(in);
    ASSERT_EQ(t.levels.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_EQ(t.levels[i], log.steps[i].level);
      EXPECT_EQ(t.selected[i], log.steps[i].selected);
    }
  }
}

TEST(RunLog, LevelTraceErrors) {
  auto read = [](const std::string& s) {
    return error_of([&] {
      std::istringstream in(s);
      read_level_trace(in);
    });
  };
  EXPECT_EQ(read("index,lvl\n1,0.1\n"), "log CSV needs 'level' and 'selected' columns");
  EXPECT_EQ(read("level,selected\n0.1,yes\n"), "malformed selected flag on log line 2");
  EXPECT_EQ(read("{\"level\":0.1,\"selected\":true}\n{oops\n"), "malformed JSON on log line 2");
  EXPECT_EQ(read("{\"level\":0.1}\n"), "log line 1 lacks level/selected");
}

TEST(Golden, Headers) {
  std::ostringstream p;
  write_posthoc_csv(p, {{1, FcpBound::vacuous()}, {2, FcpBound::finite(0.25)}});
  EXPECT_EQ(p.str(), "n,bound\n1,vacuous\n2,0.25\n");

  std::ostringstream t;
  write_trace_csv(t, "s", {});
  EXPECT_EQ(t.str(), "scheme,index,theta,x,level,selected,lordci_lo,lordci_hi,cond_lo,cond_hi,cutoff\n");

  std::ostringstream tab;
  ReplicationSummary s;
  s.scheme = "fixed-threshold";
  write_table1_csv(tab, {s});
  std::istringstream in(tab.str());
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first, "metric,fixed-threshold:lord-ci,fixed-threshold:conditional");

  std::ostringstream inc;
  InconsistencyRun run;
  run.panel.push_back({1, 7, 2.0, 3.5, Interval::closed(0.5, 5.0), 3.0, true});
  write_inconsistency_csv(inc, run);
  EXPECT_EQ(inc.str(), "iteration,index,theta,x,lo,hi,cutoff,kept\n1,7,2,3.5,0.5,5,3,1\n");
}

TEST(Golden, Endpoints) {
  std::ostringstream out;
  write_endpoints_csv(out, MarginalRuleSpec::one_sided(), 0.1, -4.0, 4.0, 3);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x,lo,hi,lo_open,hi_open");
  std::getline(in, line);
  EXPECT_EQ(line.substr(0, 3), "-4,");
  EXPECT_EQ(line.substr(line.size() - 6), ",0,1,0");
  EXPECT_THROW(write_endpoints_csv(out, MarginalRuleSpec::symmetric(), 0.1, 1.0, 1.0, 5), ConfigError);
  EXPECT_THROW(write_endpoints_csv(out, MarginalRuleSpec::symmetric(), 0.1, 0.0, 1.0, 1), ConfigError);
}

TEST(Samples, ConfigsParse) {
  for (const char* name : {"stream_sign_symmetric.json", "stream_fixed_conditional.json", "stream_localization.json"}) {
    std::ifstream f(std::string(OFCR_SAMPLES_DIR) + "/" + name);
    ASSERT_TRUE(f) << name;
    EXPECT_NO_THROW(stream_config_from_json(json::parse(f))) << name;
  }
}

}  // namespace
}  // namespace ofcr::io
