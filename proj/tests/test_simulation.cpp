#include <cmath>
#include <cstdlib>

#include <gtest/gtest.h>

#include "ofcr/simulation.hpp"

namespace ofcr {
namespace {

TEST(Generators, NearlyNullMixture) {
  rng::Philox4x32 g(701, 0);
  const std::size_t n = 1000000;
  const auto thetas = gen_thetas_61(n, g);
  std::size_t nonnull = 0;
  double sum = 0.0;
  for (double t : thetas) {
    if (std::abs(t) == 1e-3) continue;
    ASSERT_GE(t, 1.0);
    ASSERT_EQ(t, std::floor(t));
    ++nonnull;
    sum += t;
  }
  EXPECT_NEAR(static_cast<double>(nonnull) / n, 0.1, 0.001);
  EXPECT_NEAR(sum / static_cast<double>(nonnull), 2.0, 0.01);
}

TEST(Generators, AlternatingNullsWithSignalsAtTwo) {
  rng::Philox4x32 g(702, 0);
  const std::size_t n = 1000000;
  const auto thetas = gen_thetas_62(n, g);
  std::size_t signals = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    const double t = thetas[i - 1];
    if (t == 2.0) {
      ++signals;
    } else {
      ASSERT_EQ(t, i % 2 == 0 ? 1e-3 : -1e-3);
    }
  }
  EXPECT_NEAR(static_cast<double>(signals) / n, 0.2, 0.0015);
}

TEST(Generators, MixtureValidation) {
  EXPECT_THROW(MixtureSpec{}.validate(), std::invalid_argument);
  EXPECT_THROW((MixtureSpec{{{0.5, PointMass{0.0}}}}.validate()), std::invalid_argument);
  EXPECT_THROW((MixtureSpec{{{1.0, OnePlusPoisson{0.0}}}}.validate()), std::invalid_argument);
  EXPECT_NO_THROW(MixtureSpec::nearly_null_with_rare_signals().validate());
}

TEST(ParallelMap, IndependentOfThreadCount) {
  auto fn = [](std::size_t r) {
    rng::Philox4x32 g(703, r);
    double s = 0.0;
    for (int k = 0; k < 1000; ++k) s += g.normal();
    return s;
  };
  const auto one = parallel_map<double>(50, 1, fn);
  const auto four = parallel_map<double>(50, 4, fn);
  EXPECT_EQ(one, four);
  EXPECT_TRUE(parallel_map<double>(0, 3, fn).empty());
}

TEST(ParallelMap, PropagatesExceptions) {
  auto fn = [](std::size_t r) -> int {
    if (r == 7) throw std::runtime_error("boom");
    return static_cast<int>(r);
  };
  EXPECT_THROW(parallel_map<int>(20, 3, fn), std::runtime_error);
}

TEST(Threads, EnvironmentOverride) {
  ::setenv("ONLINE_FCR_THREADS", "3", 1);
  EXPECT_EQ(resolve_threads(1), 3u);
  ::unsetenv("ONLINE_FCR_THREADS");
  EXPECT_EQ(resolve_threads(2), 2u);
  EXPECT_GE(resolve_threads(0), 1u);
}

TEST(Schemes, Parse) {
  EXPECT_EQ(parse_scheme("fixed-threshold"), Scheme::fixed_threshold);
  EXPECT_EQ(parse_scheme("sgn-det-symm"), Scheme::sgn_det_symm);
  EXPECT_EQ(parse_scheme("sgn-det-mqc"), Scheme::sgn_det_mqc);
  try {
    parse_scheme("nope");
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("sgn-det-mqc"), std::string::npos);
  }
}

ExperimentConfig small(Scheme s, unsigned threads) {
  ExperimentConfig cfg;
  cfg.scheme = s;
  cfg.m = 2000;
  cfg.n_reps = 12;
  cfg.seed = 704;
  cfg.threads = threads;
  return cfg;
}

TEST(Experiment, DeterministicAcrossThreads) {
  for (auto s : {Scheme::fixed_threshold, Scheme::sgn_det_symm, Scheme::sgn_det_mqc}) {
    const auto a = run_experiment(small(s, 1));
    const auto b = run_experiment(small(s, 3));
    EXPECT_EQ(a.summary.lord_ci.rates.fcr.value, b.summary.lord_ci.rates.fcr.value);
    EXPECT_EQ(a.summary.lord_ci.rates.mean_selected.value, b.summary.lord_ci.rates.mean_selected.value);
    EXPECT_EQ(a.summary.conditional.rates.fcr.value, b.summary.conditional.rates.fcr.value);
    ASSERT_EQ(a.trace_rep0.size(), b.trace_rep0.size());
    EXPECT_EQ(a.trace_rep0.size(), 2000u);
  }
}

TEST(Experiment, PathwiseChecks) {
  for (auto s : {Scheme::fixed_threshold, Scheme::sgn_det_symm, Scheme::sgn_det_mqc}) {
    const auto r = run_experiment(small(s, 1)).summary;
    EXPECT_EQ(r.domination_violations, 0u) << r.scheme;
    EXPECT_EQ(r.superset_violations, 0u) << r.scheme;
    EXPECT_LE(r.lord_ci.rates.est_fcp.value, 0.1) << r.scheme;
    if (s != Scheme::fixed_threshold) {
      EXPECT_EQ(r.lord_ci_not_sign_determining, 0u) << r.scheme;
    }
  }
}

TEST(Experiment, TraceRowsAreConsistent) {
  const auto res = run_experiment(small(Scheme::fixed_threshold, 1));
  for (const auto& row : res.trace_rep0) {
    EXPECT_EQ(row.selected, std::abs(row.x) > 3.0);
    EXPECT_EQ(row.lord_ci.has_value(), row.selected);
    EXPECT_EQ(row.conditional.has_value(), row.selected);
    if (row.selected) {
      EXPECT_EQ(*row.cutoff, 3.0);
    }
  }
}

TEST(Experiment, Validation) {
  ExperimentConfig cfg;
  cfg.m = 0;
  EXPECT_THROW(run_experiment(cfg), std::invalid_argument);
  cfg.m = 10;
  cfg.alpha = 1.0;
  EXPECT_THROW(run_experiment(cfg), std::invalid_argument);
}

TEST(Inconsistency, CountsNeverIncrease) {
  InconsistencyConfig cfg;
  cfg.m = 2000;
  cfg.seed = 705;
  for (std::size_t r = 0; r < 20; ++r) {
    const auto run = inconsistency_run(cfg, r, r == 0);
    std::size_t prev = run.lord_ci_selected;
    for (const auto& it : run.iterations) {
      EXPECT_LE(it.n_intervals, prev);
      EXPECT_EQ(it.n_kept + it.n_crossing_zero, it.n_intervals);
      prev = it.n_kept;
    }
    if (r == 0) {
      std::size_t total = 0;
      for (const auto& it : run.iterations) total += it.n_intervals;
      EXPECT_EQ(run.panel.size(), total);
    } else {
      EXPECT_TRUE(run.panel.empty());
    }
  }
}

TEST(Inconsistency, ZeroExclusionCutoff) {
  // At |x| = d the two-sided conditional law puts exactly `level` mass on
  // {|Y| >= d}, so zero sits on the boundary of the acceptance region.
  for (double c : {1.0, 2.5, 4.0}) {
    const double d = zero_exclusion_cutoff(c, 0.1);
    EXPECT_NEAR(std::exp(conditional_log_outer_mass(d, 0.0, TruncationContext::two_sided(c))), 0.1, 1e-12);
  }
}

}  // namespace
}  // namespace ofcr
