#pragma once

// Conformal prediction intervals (full and split) and their use inside the
// online protocol: levels come from LORD-CI, and an interval is reported only
// when a selection rule over the interval and the features fires.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ofcr/interval.hpp"
#include "ofcr/interval_rules.hpp"
#include "ofcr/protocol.hpp"
#include "ofcr/scheduler.hpp"

namespace ofcr::conformal {

struct TrainingSet {
  std::vector<std::vector<double>> x;
  std::vector<double> y;

  std::size_t size() const { return y.size(); }
  std::size_t dim() const { return x.empty() ? 0 : x.front().size(); }

  void validate() const {
    if (y.empty()) throw std::invalid_argument("training set is empty");
    if (x.size() != y.size()) throw std::invalid_argument("training features and responses differ in count");
    for (const auto& row : x) {
      if (row.size() != dim()) throw std::invalid_argument("training features have inconsistent dimension");
      for (double v : row) {
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite training feature");
      }
    }
    for (double v : y) {
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite training response");
    }
  }

  TrainingSet slice(std::size_t begin, std::size_t end) const {
    TrainingSet t;
    t.x.assign(x.begin() + static_cast<std::ptrdiff_t>(begin), x.begin() + static_cast<std::ptrdiff_t>(end));
    t.y.assign(y.begin() + static_cast<std::ptrdiff_t>(begin), y.begin() + static_cast<std::ptrdiff_t>(end));
    return t;
  }
};

struct KNearestMean {
  std::size_t k = 5;
};
struct RidgeLinear {
  double lambda = 1.0;
};
using PredictorSpec = std::variant<KNearestMean, RidgeLinear>;

inline void validate(const PredictorSpec& spec, std::size_t n) {
  if (const auto* k = std::get_if<KNearestMean>(&spec)) {
    if (k->k < 1 || k->k > n) throw std::invalid_argument("k must lie in 1..n");
  } else if (!(std::get<RidgeLinear>(spec).lambda >= 0.0)) {
    throw std::invalid_argument("ridge lambda must be nonnegative");
  }
}

namespace detail {

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return s;
}

// k-NN weights for a query: points strictly closer than the k-th distance get
// weight 1/k; points tied at that distance share the remainder equally. The
// weights depend only on the features, so the fit is linear in y and does not
// depend on the order of the training points.
inline std::vector<double> knn_weights(const std::vector<std::vector<double>>& xs, const std::vector<double>& q,
                                       std::size_t k) {
  const std::size_t n = xs.size();
  std::vector<double> d(n);
  for (std::size_t j = 0; j < n; ++j) d[j] = sq_dist(xs[j], q);
  std::vector<double> sorted = d;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
  const double dk = sorted[k - 1];
  std::size_t closer = 0;
  std::size_t tied = 0;
  for (double v : d) {
    if (v < dk) ++closer;
    if (v == dk) ++tied;
  }
  std::vector<double> w(n, 0.0);
  const double kk = static_cast<double>(k);
  const double tie_w = static_cast<double>(k - closer) / static_cast<double>(tied) / kk;
  for (std::size_t j = 0; j < n; ++j) {
    if (d[j] < dk) w[j] = 1.0 / kk;
    if (d[j] == dk) w[j] = tie_w;
  }
  return w;
}

inline Eigen::MatrixXd design(const std::vector<std::vector<double>>& xs) {
  const std::size_t n = xs.size();
  const std::size_t p = xs.empty() ? 0 : xs.front().size();
  Eigen::MatrixXd z(n, p + 1);
  for (std::size_t i = 0; i < n; ++i) {
    z(i, 0) = 1.0;
    for (std::size_t j = 0; j < p; ++j) z(i, j + 1) = xs[i][j];
  }
  return z;
}

// (Z'Z + diag(0, lambda, ...))^{-1} Z', intercept unpenalized.
inline Eigen::MatrixXd ridge_solve_operator(const Eigen::MatrixXd& z, double lambda) {
  Eigen::MatrixXd gram = z.transpose() * z;
  for (Eigen::Index j = 1; j < gram.rows(); ++j) gram(j, j) += lambda;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 1e-12 * gram.norm()) {
    throw std::runtime_error("ridge system is singular; use lambda > 0");
  }
  return ldlt.solve(z.transpose());
}

}  // namespace detail

/// Fitted values S y on the given points, for the predictor fitted to those
/// same points. Both shipped predictors are linear smoothers.
inline Eigen::MatrixXd smoother_matrix(const PredictorSpec& spec, const std::vector<std::vector<double>>& xs) {
  validate(spec, xs.size());
  const auto n = static_cast<Eigen::Index>(xs.size());
  if (const auto* knn = std::get_if<KNearestMean>(&spec)) {
    Eigen::MatrixXd s(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto w = detail::knn_weights(xs, xs[static_cast<std::size_t>(i)], knn->k);
      for (Eigen::Index j = 0; j < n; ++j) s(i, j) = w[static_cast<std::size_t>(j)];
    }
    return s;
  }
  const Eigen::MatrixXd z = detail::design(xs);
  return z * detail::ridge_solve_operator(z, std::get<RidgeLinear>(spec).lambda);
}

class FittedModel {
 public:
  FittedModel(const PredictorSpec& spec, const TrainingSet& train) : spec_(spec), train_(train) {
    train.validate();
    validate(spec, train.size());
    if (const auto* r = std::get_if<RidgeLinear>(&spec)) {
      const Eigen::MatrixXd z = detail::design(train.x);
      const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(train.y.data(), static_cast<Eigen::Index>(train.size()));
      beta_ = detail::ridge_solve_operator(z, r->lambda) * y;
    }
  }

  double predict(const std::vector<double>& x) const {
    if (x.size() != train_.dim()) throw std::invalid_argument("feature dimension mismatch");
    if (const auto* knn = std::get_if<KNearestMean>(&spec_)) {
      const auto w = detail::knn_weights(train_.x, x, knn->k);
      double s = 0.0;
      for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * train_.y[j];
      return s;
    }
    double s = beta_(0);
    for (std::size_t j = 0; j < x.size(); ++j) s += beta_(static_cast<Eigen::Index>(j + 1)) * x[j];
    return s;
  }

  const TrainingSet& training() const { return train_; }

 private:
  PredictorSpec spec_;
  TrainingSet train_;
  Eigen::VectorXd beta_;
};

struct YGrid {
  double lo = -10.0;
  double hi = 10.0;
  std::size_t steps = 401;

  void validate() const {
    if (steps < 3) throw std::invalid_argument("y grid needs at least 3 steps");
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) throw std::invalid_argument("y grid bounds invalid");
  }
  double at(std::size_t k) const { return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(steps - 1); }
};

struct FullConformalResult {
  Interval interval;  // closed hull of the accepted grid points; empty if none
  bool non_contiguous = false;  // the accepted set had gaps; the hull was returned
  bool touches_grid_edge = false;  // a grid endpoint was accepted; the true set may extend further
  std::size_t n_accepted = 0;
};

/// Accept y iff #{j : r_j >= r_{n+1}} > floor(level (n+1)), i.e. the
/// conformal p-value exceeds the level. Ties count against rejection.
inline bool conformal_accepts(std::size_t count_at_least, std::size_t n_plus_1, double level) {
  const auto cut = static_cast<std::size_t>(std::floor(level * static_cast<double>(n_plus_1) + 1e-12));
  return count_at_least > cut;
}

namespace detail {
template <class Residuals>
FullConformalResult scan_grid(const YGrid& grid, std::size_t n_plus_1, double level, const Residuals& residuals) {
  grid.validate();
  validate_level(level);
  FullConformalResult out;
  std::optional<std::size_t> first;
  std::size_t last = 0;
  bool gap_open = false;
  std::vector<double> r;
  for (std::size_t k = 0; k < grid.steps; ++k) {
    residuals(grid.at(k), r);
    const double mine = r.back();
    std::size_t count = 0;
    for (double v : r) count += v >= mine ? 1 : 0;
    if (conformal_accepts(count, n_plus_1, level)) {
      if (first && gap_open) out.non_contiguous = true;
      if (!first) first = k;
      last = k;
      gap_open = false;
      ++out.n_accepted;
    } else if (first) {
      gap_open = true;
    }
  }
  if (!first) {
    out.interval = Interval::empty();
    return out;
  }
  out.interval = Interval::closed(grid.at(*first), grid.at(last));
  out.touches_grid_edge = *first == 0 || last == grid.steps - 1;
  return out;
}
}  // namespace detail

/// Full conformal interval with a generic fit: `fit_predict(xs, ys)` returns
/// the fitted values at all of xs, and must not depend on the order of the
/// points.
template <class FitPredict>
FullConformalResult full_conformal_interval_generic(const TrainingSet& train, const std::vector<double>& x_new,
                                                    double level, const YGrid& grid, const FitPredict& fit_predict) {
  train.validate();
  if (x_new.size() != train.dim()) throw std::invalid_argument("feature dimension mismatch");
  std::vector<std::vector<double>> xs = train.x;
  xs.push_back(x_new);
  std::vector<double> ys = train.y;
  ys.push_back(0.0);
  return detail::scan_grid(grid, xs.size(), level, [&](double y, std::vector<double>& r) {
    ys.back() = y;
    const std::vector<double> fitted = fit_predict(xs, ys);
    r.resize(ys.size());
    for (std::size_t j = 0; j < ys.size(); ++j) r[j] = std::abs(ys[j] - fitted[j]);
  });
}

/// Full conformal interval for the shipped predictors. Since the refit is
/// linear in y, the residuals on the grid are |a_j + b_j y| with a, b computed
/// once.
inline FullConformalResult full_conformal_interval(const TrainingSet& train, const std::vector<double>& x_new,
                                                   double level, const PredictorSpec& predictor, const YGrid& grid) {
  train.validate();
  if (x_new.size() != train.dim()) throw std::invalid_argument("feature dimension mismatch");
  std::vector<std::vector<double>> xs = train.x;
  xs.push_back(x_new);
  validate(predictor, xs.size());
  const auto n1 = static_cast<Eigen::Index>(xs.size());
  Eigen::VectorXd y0(n1);
  for (Eigen::Index j = 0; j + 1 < n1; ++j) y0(j) = train.y[static_cast<std::size_t>(j)];
  y0(n1 - 1) = 0.0;
  // residual(y) = (I - S)(y0 + y e_{n+1}) = a + b y; S itself is never formed.
  Eigen::VectorXd s_y0(n1);
  Eigen::VectorXd s_last(n1);
  if (const auto* knn = std::get_if<KNearestMean>(&predictor)) {
    for (Eigen::Index i = 0; i < n1; ++i) {
      const auto w = detail::knn_weights(xs, xs[static_cast<std::size_t>(i)], knn->k);
      s_y0(i) = Eigen::Map<const Eigen::VectorXd>(w.data(), n1).dot(y0);
      s_last(i) = w.back();
    }
  } else {
    const Eigen::MatrixXd z = detail::design(xs);
    const Eigen::MatrixXd op = detail::ridge_solve_operator(z, std::get<RidgeLinear>(predictor).lambda);
    s_y0 = z * (op * y0);
    s_last = z * op.col(n1 - 1);
  }
  const Eigen::VectorXd a = y0 - s_y0;
  Eigen::VectorXd b = -s_last;
  b(n1 - 1) += 1.0;
  return detail::scan_grid(grid, xs.size(), level, [&](double y, std::vector<double>& r) {
    r.resize(static_cast<std::size_t>(n1));
    for (Eigen::Index j = 0; j < n1; ++j) r[static_cast<std::size_t>(j)] = std::abs(a(j) + b(j) * y);
  });
}

// ---------------------------------------------------------------------------
// Split conformal

enum class ScoreKind { absolute, normalized };

/// A fit on the first part of the training set and sorted calibration scores
/// from the rest. With normalized scores the residual is divided by a local
/// spread: the mean absolute fit residual over the nearest training points.
class SplitConformal {
 public:
  SplitConformal(const TrainingSet& data, const PredictorSpec& predictor, double train_fraction,
                 ScoreKind score = ScoreKind::absolute, std::size_t spread_k = 20)
      : score_(score) {
    data.validate();
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw std::invalid_argument("train fraction must lie in (0,1)");
    const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(data.size())));
    if (n_train < 1 || n_train >= data.size()) throw std::invalid_argument("both split halves must be nonempty");
    model_ = std::make_shared<FittedModel>(predictor, data.slice(0, n_train));
    if (score == ScoreKind::normalized) {
      const TrainingSet& t = model_->training();
      abs_resid_.resize(t.size());
      for (std::size_t j = 0; j < t.size(); ++j) abs_resid_[j] = std::abs(t.y[j] - model_->predict(t.x[j]));
      spread_k_ = std::min(spread_k, t.size());
      if (spread_k_ < 1) throw std::invalid_argument("spread_k must be positive");
    }
    for (std::size_t j = n_train; j < data.size(); ++j) {
      scores_.push_back(std::abs(data.y[j] - model_->predict(data.x[j])) / scale(data.x[j]));
    }
    std::sort(scores_.begin(), scores_.end());
  }

  std::size_t n_cal() const { return scores_.size(); }

  /// 1-based rank of the calibration score used at `level`:
  /// ceil((1 - level)(n_cal + 1)).
  std::size_t quantile_index(double level) const {
    validate_level(level);
    return static_cast<std::size_t>(std::ceil((1.0 - level) * static_cast<double>(n_cal() + 1) - 1e-9));
  }

  /// Closed interval prediction +- q * scale. Throws when the calibration set
  /// is too small for the level.
  Interval interval(const std::vector<double>& x, double level) const {
    const auto iv = interval_or_whole(x, level);
    if (!iv.second) throw std::invalid_argument("calibration set too small for the requested level");
    return iv.first;
  }

  /// As interval(), but returns the whole line (flag false) when the quantile
  /// index exceeds n_cal.
  std::pair<Interval, bool> interval_or_whole(const std::vector<double>& x, double level) const {
    const std::size_t k = quantile_index(level);
    if (k > n_cal()) return {Interval::whole(), false};
    const double half = scores_[k - 1] * scale(x);
    const double pred = model_->predict(x);
    return {Interval::closed(pred - half, pred + half), true};
  }

  double predict(const std::vector<double>& x) const { return model_->predict(x); }

 private:
  double scale(const std::vector<double>& x) const {
    if (score_ == ScoreKind::absolute) return 1.0;
    const auto w = detail::knn_weights(model_->training().x, x, spread_k_);
    double s = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * abs_resid_[j];
    return s + 1e-8;
  }

  ScoreKind score_;
  std::shared_ptr<FittedModel> model_;
  std::vector<double> abs_resid_;
  std::size_t spread_k_ = 0;
  std::vector<double> scores_;
};

inline Interval split_conformal_interval(const TrainingSet& data, const std::vector<double>& x_new, double level,
                                         const PredictorSpec& predictor, double train_fraction) {
  return SplitConformal(data, predictor, train_fraction).interval(x_new, level);
}

// ---------------------------------------------------------------------------
// Selective conformal inference

struct FullMode {
  YGrid grid;
};
struct SplitMode {
  double train_fraction = 0.5;
  ScoreKind score = ScoreKind::absolute;
  std::size_t spread_k = 20;
};

struct ConformalConfig {
  PredictorSpec predictor = RidgeLinear{1.0};
  std::variant<FullMode, SplitMode> mode = SplitMode{};
};

/// Report when the interval is no wider than the budget.
struct WidthBudget {
  double max_width = 1.0;
};
/// Report when the interval misses a reference value.
struct ExcludesValue {
  double value = 0.0;
};
/// Report when the features fall within `radius` of `center`.
struct FeatureBall {
  std::vector<double> center;
  double radius = 1.0;
};
using ConformalSelection = std::variant<WidthBudget, ExcludesValue, FeatureBall>;

struct ConformalStep {
  std::size_t index = 0;
  double level = 0.0;
  bool selected = false;
  std::optional<Interval> interval;  // present iff selected
  bool unbounded = false;  // the calibration set could not support the level
  bool grid_edge = false;  // full mode: an accepted grid endpoint
};

struct ConformalRun {
  std::vector<ConformalStep> steps;
  LordCiScheduler final_state;
};

namespace detail {
inline bool select_interval(const ConformalSelection& sel, const Interval& iv, const std::vector<double>& x) {
  if (const auto* wb = std::get_if<WidthBudget>(&sel)) return !iv.is_empty() && iv.width() <= wb->max_width;
  if (const auto* ev = std::get_if<ExcludesValue>(&sel)) return !iv.is_empty() && !iv.contains(ev->value);
  const auto& ball = std::get<FeatureBall>(sel);
  if (ball.center.size() != x.size()) throw std::invalid_argument("feature ball dimension mismatch");
  return sq_dist(ball.center, x) <= ball.radius * ball.radius;
}
}  // namespace detail

/// Per test point: commit the LORD-CI level, build the conformal interval at
/// that level, report it if the selection rule fires.
inline ConformalRun selective_conformal_stream(const TrainingSet& train,
                                               const std::vector<std::vector<double>>& test_xs,
                                               const ConformalSelection& selection, double alpha, double w0,
                                               std::shared_ptr<const GammaSequence> gamma,
                                               const ConformalConfig& cfg) {
  train.validate();
  LordCiScheduler sched(alpha, w0, std::move(gamma));
  std::optional<SplitConformal> split;
  if (const auto* sm = std::get_if<SplitMode>(&cfg.mode)) {
    split.emplace(train, cfg.predictor, sm->train_fraction, sm->score, sm->spread_k);
  }
  ConformalRun run{{}, sched};
  run.steps.reserve(test_xs.size());
  for (const auto& x : test_xs) {
    const double level = sched.next_level();
    ConformalStep step;
    step.index = sched.time();
    step.level = level;
    Interval iv;
    if (split) {
      const auto r = split->interval_or_whole(x, level);
      iv = r.first;
      step.unbounded = !r.second;
    } else {
      const auto r = full_conformal_interval(train, x, level, cfg.predictor, std::get<FullMode>(cfg.mode).grid);
      iv = r.interval;
      step.grid_edge = r.touches_grid_edge;
    }
    step.selected = detail::select_interval(selection, iv, x);
    if (step.selected) step.interval = iv;
    sched.record_decision(step.index, step.selected, level);
    run.steps.push_back(std::move(step));
  }
  run.final_state = sched;
  return run;
}

// ---------------------------------------------------------------------------
// CSV ingest: header row, numeric columns, last column is the response.

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_number(std::string s, std::size_t line_no) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) throw std::invalid_argument("empty field on line " + std::to_string(line_no));
  s = s.substr(b, e - b + 1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw std::invalid_argument("malformed number '" + s + "' on line " + std::to_string(line_no));
  }
  return v;
}
}  // namespace detail

struct FeatureTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline FeatureTable read_numeric_csv(std::istream& in) {
  FeatureTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw std::invalid_argument("line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                  " fields, header has " + std::to_string(t.header.size()));
    }
    std::vector<double> row;
    for (auto& c : cells) row.push_back(detail::parse_number(c, line_no));
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw std::invalid_argument("CSV has no header row");
  return t;
}

inline TrainingSet training_from_table(const FeatureTable& t) {
  if (t.header.size() < 2) throw std::invalid_argument("training CSV needs at least one feature and a response");
  TrainingSet s;
  for (const auto& row : t.rows) {
    s.x.emplace_back(row.begin(), row.end() - 1);
    s.y.push_back(row.back());
  }
  s.validate();
  return s;
}

inline TrainingSet read_training_csv(std::istream& in) { return training_from_table(read_numeric_csv(in)); }

}  // namespace ofcr::conformal
