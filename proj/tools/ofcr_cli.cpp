// ofcr: command-line front end.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or config error.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ofcr/ofcr.hpp"

namespace {

using ofcr::io::ConfigError;
using ofcr::io::json;

struct Output {
  std::ofstream file;
  std::ostream* stream = &std::cout;

  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file.open(path);
    if (!file) throw ConfigError("cannot open output file " + path);
    stream = &file;
  }
  std::ostream& operator*() { return *stream; }
  std::ostream* operator->() { return stream; }
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  return in;
}

json read_json_file(const std::string& path) {
  std::ifstream in = open_input(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string scheme = "all";
  double alpha = 0.1;
  std::size_t reps = 2000;
  std::size_t m = 10000;
  std::uint64_t seed = 7;
  std::string out_dir = ".";
  bool full_scale = false;
  unsigned threads = 0;
  bool inconsistency = false;
};

int run_simulate(const SimulateArgs& a) {
  std::vector<ofcr::Scheme> schemes;
  if (a.scheme == "all") {
    schemes = {ofcr::Scheme::fixed_threshold, ofcr::Scheme::sgn_det_symm, ofcr::Scheme::sgn_det_mqc};
  } else {
    try {
      schemes.push_back(ofcr::parse_scheme(a.scheme));
    } catch (const std::invalid_argument&) {
      std::string valid;
      for (const auto& n : ofcr::scheme_names()) valid += n + ", ";
      throw ConfigError("unknown scheme '" + a.scheme + "' (valid: " + valid + "all)");
    }
  }
  if (!(a.alpha > 0.0 && a.alpha < 1.0)) throw ConfigError("--alpha must lie in (0,1)");
  if (a.reps < 1 || a.m < 1) throw ConfigError("--reps and --m must be positive");
  std::filesystem::create_directories(a.out_dir);

  std::vector<ofcr::ReplicationSummary> summaries;
  std::ofstream trace(std::filesystem::path(a.out_dir) / "intervals_rep0.csv");
  if (!trace) throw std::runtime_error("cannot write to " + a.out_dir);
  trace << ofcr::io::kTraceCsvHeader << '\n';
  for (auto s : schemes) {
    ofcr::ExperimentConfig cfg;
    cfg.scheme = s;
    cfg.alpha = a.alpha;
    cfg.m = a.m;
    cfg.n_reps = a.full_scale ? 10000 : a.reps;
    cfg.seed = a.seed;
    cfg.threads = a.threads;
    auto result = ofcr::run_experiment(cfg);
    ofcr::io::write_trace_csv(trace, result.summary.scheme, result.trace_rep0, false);
    summaries.push_back(std::move(result.summary));
  }

  json summary = json::object();
  json arr = json::array();
  for (const auto& s : summaries) arr.push_back(ofcr::io::to_json(s));
  summary["schemes"] = arr;
  if (a.inconsistency) {
    ofcr::InconsistencyConfig ic;
    ic.alpha = a.alpha;
    ic.m = a.m;
    ic.n_reps = a.full_scale ? 10000 : std::min<std::size_t>(a.reps, 500);
    ic.seed = a.seed;
    ic.threads = a.threads;
    const auto rep = ofcr::inconsistency_demo(ic);
    summary["inconsistency"] = ofcr::io::to_json(rep);
    std::ofstream panels(std::filesystem::path(a.out_dir) / "inconsistency_rep0.csv");
    ofcr::io::write_inconsistency_csv(panels, rep.rep0);
  }
  std::ofstream(std::filesystem::path(a.out_dir) / "summary.json") << summary.dump(2) << '\n';
  std::ofstream table(std::filesystem::path(a.out_dir) / "table1.csv");
  ofcr::io::write_table1_csv(table, summaries);

  std::printf("%-16s %-12s %8s %8s %10s %8s\n", "scheme", "intervals", "FCR", "mFCR", "E[sum S]", "sgn-det");
  for (const auto& s : summaries) {
    for (const auto* mode : {"lord-ci", "conditional"}) {
      const auto& m = std::string(mode) == "lord-ci" ? s.lord_ci : s.conditional;
      std::printf("%-16s %-12s %8.4f %8.4f %10.3f %8.3f\n", s.scheme.c_str(), mode, m.rates.fcr.value,
                  m.rates.mfcr.value, m.rates.mean_selected.value, m.sign_determining_fraction.value);
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// stream

std::optional<double> parse_real(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return std::nullopt;
  const auto e = s.find_last_not_of(" \t\r");
  const std::string t = s.substr(b, e - b + 1);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

int run_stream_cmd(const std::string& config_path, const std::string& input, const std::string& out_path,
                   const std::string& csv_path) {
  const auto sc = ofcr::io::stream_config_from_json(read_json_file(config_path));
  std::ifstream file_in;
  std::istream* in = &std::cin;
  if (input != "-") {
    file_in = open_input(input);
    in = &file_in;
  }
  Output out(out_path);
  std::optional<Output> csv;
  if (!csv_path.empty()) {
    csv.emplace(csv_path);
    **csv << ofcr::io::kRunLogCsvHeader << '\n';
  }

  ofcr::OnlineProtocol proto = sc.resume ? ofcr::OnlineProtocol(sc.protocol, *sc.resume) : ofcr::OnlineProtocol(sc.protocol);
  std::string line;
  std::size_t line_no = 0;
  int column = -1;  // CSV column named x, once a header is seen
  bool first = true;
  while (std::getline(*in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::string field = line;
    if (first) {
      first = false;
      if (!parse_real(line)) {
        std::vector<std::string> cols;
        std::string cell;
        std::istringstream ss(line);
        while (std::getline(ss, cell, ',')) cols.push_back(cell);
        for (std::size_t k = 0; k < cols.size(); ++k) {
          if (cols[k] == "x") column = static_cast<int>(k);
        }
        if (column < 0) throw ConfigError("line 1: not a number and no CSV column named x");
        continue;
      }
    }
    if (column >= 0) {
      std::vector<std::string> cells;
      std::string cell;
      std::istringstream ss(line);
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (static_cast<int>(cells.size()) <= column) throw ConfigError("line " + std::to_string(line_no) + ": missing x");
      field = cells[static_cast<std::size_t>(column)];
    }
    const auto x = parse_real(field);
    if (!x) throw ConfigError("line " + std::to_string(line_no) + ": malformed observation '" + field + "'");
    const ofcr::Commitment c = proto.commit();
    const ofcr::StepOutcome step = proto.observe(c.token, *x);
    *out << ofcr::io::to_json(step).dump() << '\n';
    out->flush();
    if (csv) {
      ofcr::io::write_csv_row(**csv, step.index, step.level, step.selected, step.interval, step.sign,
                              step.localized_index);
    }
  }
  *out << ofcr::io::stream_summary(proto.scheduler()).dump() << '\n';
  out->flush();
  return 0;
}

// ---------------------------------------------------------------------------
// posthoc

int run_posthoc(const std::string& log_path, double a, double delta, const std::string& out_path) {
  ofcr::PosthocConfig cfg{a, delta};
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  ofcr::io::LevelTrace t;
  if (log_path == "-") {
    t = ofcr::io::read_level_trace(std::cin);
  } else {
    std::ifstream in = open_input(log_path);
    t = ofcr::io::read_level_trace(in);
  }
  auto flags = std::make_unique<bool[]>(t.selected.size());
  for (std::size_t i = 0; i < t.selected.size(); ++i) flags[i] = t.selected[i];
  const auto pts =
      ofcr::track_uniform_bound(t.levels, std::span<const bool>(flags.get(), t.selected.size()), cfg);
  Output out(out_path);
  ofcr::io::write_posthoc_csv(*out, pts);
  return 0;
}

// ---------------------------------------------------------------------------
// conformal

struct ConformalArgs {
  std::string train, test, out;
  std::string mode = "split";
  std::optional<double> level, fcr_alpha;
  std::string predictor = "ridge";
  std::size_t k = 5;
  double lambda = 1.0;
  double train_fraction = 0.5;
  std::string score = "absolute";
  double y_lo = -10.0, y_hi = 10.0;
  std::size_t y_steps = 401;
  std::optional<double> width_budget, exclude;
};

int run_conformal(const ConformalArgs& a) {
  namespace cf = ofcr::conformal;
  if (a.level.has_value() == a.fcr_alpha.has_value()) throw ConfigError("give exactly one of --level and --fcr-alpha");
  std::ifstream train_in = open_input(a.train);
  std::ifstream test_in = open_input(a.test);
  cf::TrainingSet train;
  cf::FeatureTable test;
  try {
    train = cf::read_training_csv(train_in);
    test = cf::read_numeric_csv(test_in);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const std::size_t d = train.dim();
  const bool has_y = test.header.size() == d + 1;
  if (!has_y && test.header.size() != d) throw ConfigError("test CSV must have the training features, optionally y");
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  for (const auto& row : test.rows) {
    xs.emplace_back(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(d));
    if (has_y) ys.push_back(row.back());
  }

  cf::ConformalConfig cfg;
  if (a.predictor == "knn") cfg.predictor = cf::KNearestMean{a.k};
  else if (a.predictor == "ridge") cfg.predictor = cf::RidgeLinear{a.lambda};
  else throw ConfigError("unknown predictor '" + a.predictor + "' (valid: knn, ridge)");
  const cf::YGrid grid{a.y_lo, a.y_hi, a.y_steps};
  cf::ScoreKind score = cf::ScoreKind::absolute;
  if (a.score == "normalized") score = cf::ScoreKind::normalized;
  else if (a.score != "absolute") throw ConfigError("unknown score '" + a.score + "' (valid: absolute, normalized)");
  if (a.mode == "full") cfg.mode = cf::FullMode{grid};
  else if (a.mode == "split") cfg.mode = cf::SplitMode{a.train_fraction, score};
  else throw ConfigError("unknown mode '" + a.mode + "' (valid: full, split)");
  try {
    cf::validate(cfg.predictor, train.size());
    grid.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  Output out(a.out);
  if (a.level) {
    try {
      ofcr::validate_level(*a.level);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    *out << "index,lo,hi,covered,flags\n";
    std::optional<cf::SplitConformal> split;
    if (a.mode == "split") split.emplace(train, cfg.predictor, a.train_fraction, score);
    std::size_t covered = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      ofcr::Interval iv;
      std::string flags;
      if (split) {
        iv = split->interval(xs[i], *a.level);
      } else {
        const auto r = cf::full_conformal_interval(train, xs[i], *a.level, cfg.predictor, grid);
        iv = r.interval;
        if (r.non_contiguous) flags += "hull";
        if (r.touches_grid_edge) flags += flags.empty() ? "grid_edge" : ";grid_edge";
        if (r.touches_grid_edge) std::cerr << "warning: test point " << i + 1 << " accepted a grid endpoint\n";
      }
      *out << i + 1 << ',';
      if (iv.is_empty()) *out << ',';
      else *out << ofcr::io::fmt17(iv.lo()) << ',' << ofcr::io::fmt17(iv.hi());
      *out << ',';
      if (has_y) {
        const bool c = iv.contains(ys[i]);
        covered += c ? 1 : 0;
        *out << (c ? 1 : 0);
      }
      *out << ',' << flags << '\n';
    }
    if (has_y && !xs.empty()) {
      std::cerr << "coverage " << static_cast<double>(covered) / static_cast<double>(xs.size()) << " over "
                << xs.size() << " test points\n";
    }
    return 0;
  }

  cf::ConformalSelection sel;
  if (a.width_budget.has_value() == a.exclude.has_value()) {
    throw ConfigError("selective mode needs exactly one of --width-budget and --exclude");
  }
  if (a.width_budget) sel = cf::WidthBudget{*a.width_budget};
  else sel = cf::ExcludesValue{*a.exclude};
  const double alpha = *a.fcr_alpha;
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("--fcr-alpha must lie in (0,1)");
  const auto run = cf::selective_conformal_stream(
      train, xs, sel, alpha, alpha / 2.0,
      std::make_shared<const ofcr::GammaSequence>(ofcr::GammaSequence::default_lord(std::max<std::size_t>(xs.size(), 1))),
      cfg);
  *out << ofcr::io::kRunLogCsvHeader << '\n';
  std::size_t n_sel = 0;
  std::size_t n_miss = 0;
  for (std::size_t i = 0; i < run.steps.size(); ++i) {
    const auto& s = run.steps[i];
    const int sign = s.interval ? ofcr::sign_of_interval(*s.interval) : 0;
    ofcr::io::write_csv_row(*out, s.index, s.level, s.selected, s.interval, sign, std::nullopt);
    if (s.selected) {
      ++n_sel;
      if (has_y && !s.interval->contains(ys[i])) ++n_miss;
    }
  }
  std::cerr << "selected " << n_sel << " of " << run.steps.size();
  if (has_y) std::cerr << ", FCP " << (n_sel ? static_cast<double>(n_miss) / static_cast<double>(n_sel) : 0.0);
  std::cerr << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// endpoints

int run_endpoints(const std::string& rule_name, double psi, double level, double x_min, double x_max,
                  std::size_t steps, const std::string& out_path) {
  ofcr::io::json j = {{"rule", rule_name}};
  if (rule_name == "mqc") j["psi"] = psi;
  const auto rule = ofcr::io::marginal_rule_from_json(j);
  try {
    ofcr::validate_level(level);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  Output out(out_path);
  ofcr::io::write_endpoints_csv(*out, rule, level, x_min, x_max, steps);
  return 0;
}

// ---------------------------------------------------------------------------
// audit

int run_audit(const std::string& spec_path, std::size_t max_history) {
  const json j = read_json_file(spec_path);
  ofcr::io::detail::check_keys(j, "audit spec", {"version", "selection", "alpha", "w0"});
  if (!j.contains("version") || j["version"] != ofcr::io::kConfigVersion) throw ConfigError("unsupported or missing version");
  const ofcr::RuleSpec spec = ofcr::io::rule_spec_from_json(ofcr::io::detail::need(j, "selection", "audit spec"));
  ofcr::AuditOptions opts;
  if (j.contains("alpha")) opts.alpha = ofcr::io::detail::get_number(j["alpha"], "alpha");
  opts.w0 = j.contains("w0") ? ofcr::io::detail::get_number(j["w0"], "w0") : opts.alpha / 2.0;
  if (max_history > 12) throw ConfigError("--max-history must be at most 12");
  const auto rep = ofcr::monotonicity_audit(spec, max_history, opts);
  json w = json::array();
  for (const auto& v : rep.violations) {
    w.push_back({{"x", v.x},
                 {"larger_history", v.larger_history},
                 {"smaller_history", v.smaller_history},
                 {"larger_level", v.larger_level},
                 {"smaller_level", v.smaller_level}});
  }
  std::cout << json{{"history_len", rep.history_len},
                    {"pairs_checked", rep.pairs_checked},
                    {"decisions_checked", rep.decisions_checked},
                    {"n_violations", rep.n_violations},
                    {"witnesses", w}}
                   .dump(2)
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online false coverage rate control"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Replicated comparison of the three selection schemes");
  simulate->add_option("--scheme", sim.scheme, "fixed-threshold, sgn-det-symm, sgn-det-mqc or all");
  simulate->add_option("--alpha", sim.alpha, "Target FCR level");
  simulate->add_option("--reps", sim.reps, "Replications");
  simulate->add_option("--m", sim.m, "Stream length");
  simulate->add_option("--seed", sim.seed, "Seed");
  simulate->add_option("--out-dir", sim.out_dir, "Output directory");
  simulate->add_flag("--full-scale", sim.full_scale, "10000 replications");
  simulate->add_option("--threads", sim.threads, "Worker threads (0: all cores; ONLINE_FCR_THREADS overrides)");
  simulate->add_flag("--inconsistency", sim.inconsistency, "Also run the drop-and-readjust demonstration");

  std::string config_path, input = "-", stream_out, stream_csv;
  auto* stream = app.add_subcommand("stream", "Process an observation stream online");
  stream->add_option("--config", config_path, "JSON config")->required();
  stream->add_option("--input", input, "Observations, one per line or CSV column x; - for stdin");
  stream->add_option("--out", stream_out, "JSON-lines output (default stdout)");
  stream->add_option("--csv", stream_csv, "Also write the flat CSV log here");

  std::string log_path, posthoc_out;
  double a = 1.0, delta = 0.05;
  auto* posthoc = app.add_subcommand("posthoc", "Time-uniform FCP bound along a run log");
  posthoc->add_option("--log", log_path, "Run log (JSON lines or CSV); - for stdin")->required();
  posthoc->add_option("--a", a, "Free constant a > 0");
  posthoc->add_option("--delta", delta, "Failure probability");
  posthoc->add_option("--out", posthoc_out, "CSV output (default stdout)");

  ConformalArgs conf;
  auto* conformal = app.add_subcommand("conformal", "Conformal prediction intervals, optionally selective");
  conformal->add_option("--train", conf.train, "Training CSV (last column y)")->required();
  conformal->add_option("--test", conf.test, "Test CSV (features, optionally y)")->required();
  conformal->add_option("--mode", conf.mode, "full or split");
  conformal->add_option("--level", conf.level, "Miscoverage level for every test point");
  conformal->add_option("--fcr-alpha", conf.fcr_alpha, "Selective mode: FCR target with LORD-CI levels");
  conformal->add_option("--predictor", conf.predictor, "knn or ridge");
  conformal->add_option("--k", conf.k, "Neighbours for knn");
  conformal->add_option("--lambda", conf.lambda, "Ridge penalty");
  conformal->add_option("--train-fraction", conf.train_fraction, "Split mode: fraction used for fitting");
  conformal->add_option("--score", conf.score, "Split mode: absolute or normalized");
  conformal->add_option("--y-lo", conf.y_lo, "Full mode grid lower end");
  conformal->add_option("--y-hi", conf.y_hi, "Full mode grid upper end");
  conformal->add_option("--y-steps", conf.y_steps, "Full mode grid points");
  conformal->add_option("--width-budget", conf.width_budget, "Selective mode: report intervals at most this wide");
  conformal->add_option("--exclude", conf.exclude, "Selective mode: report intervals missing this value");
  conformal->add_option("--out", conf.out, "CSV output (default stdout)");

  std::string ep_rule = "mqc", ep_out;
  double ep_psi = 0.7, ep_level = 0.1, ep_lo = -6.0, ep_hi = 6.0;
  std::size_t ep_steps = 601;
  auto* endpoints = app.add_subcommand("endpoints", "Tabulate a marginal rule's interval endpoints over x");
  endpoints->add_option("--rule", ep_rule, "symmetric, one_sided or mqc");
  endpoints->add_option("--psi", ep_psi, "MQC psi");
  endpoints->add_option("--level", ep_level, "Miscoverage level");
  endpoints->add_option("--x-min", ep_lo, "Grid start");
  endpoints->add_option("--x-max", ep_hi, "Grid end");
  endpoints->add_option("--steps", ep_steps, "Grid points");
  endpoints->add_option("--out", ep_out, "CSV output (default stdout)");

  std::string spec_path;
  std::size_t max_history = 10;
  auto* audit = app.add_subcommand("audit", "Exhaustive monotonicity audit of a selection rule");
  audit->add_option("--spec", spec_path, "JSON with version and selection (alpha, w0 optional)")->required();
  audit->add_option("--max-history", max_history, "History length (at most 12)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*stream) return run_stream_cmd(config_path, input, stream_out, stream_csv);
    if (*posthoc) return run_posthoc(log_path, a, delta, posthoc_out);
    if (*conformal) return run_conformal(conf);
    if (*audit) return run_audit(spec_path, max_history);
    if (*endpoints) return run_endpoints(ep_rule, ep_psi, ep_level, ep_lo, ep_hi, ep_steps, ep_out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
