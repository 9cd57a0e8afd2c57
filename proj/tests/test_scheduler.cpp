#include <cmath>
#include <memory>
#include <vector>

#include <gtest/gtest.h>

#include "ofcr/scheduler.hpp"
#include "support.hpp"

namespace ofcr {
namespace {

std::shared_ptr<const GammaSequence> default_gamma(std::size_t horizon) {
  return std::make_shared<const GammaSequence>(GammaSequence::default_lord(horizon));
}

// Direct evaluation of the level formula in long double, independent of the
// scheduler's bookkeeping.
double level_oracle(const std::vector<bool>& history, double alpha, double w0) {
  auto g = [](long long j) -> long double {
    if (j <= 0) return 0.0L;
    const long double x = static_cast<long double>(j);
    return 0.0722L * std::log(std::max(x, 2.0L)) / (x * std::exp(std::sqrt(std::log(x))));
  };
  const auto i = static_cast<long long>(history.size()) + 1;
  long double level = g(i) * w0;
  bool first = true;
  for (std::size_t t = 0; t < history.size(); ++t) {
    if (!history[t]) continue;
    const long long tau = static_cast<long long>(t) + 1;
    level += (first ? alpha - w0 : alpha) * g(i - tau);
    first = false;
  }
  return static_cast<double>(level);
}

LordCiScheduler replay(const std::vector<bool>& history, double alpha = 0.1, double w0 = 0.05) {
  LordCiScheduler s(alpha, w0, default_gamma(history.size() + 1));
  for (std::size_t t = 0; t < history.size(); ++t) s.record_decision(t + 1, history[t]);
  return s;
}

TEST(Gamma, DefaultValues) {
  // 40-digit reference values.
  EXPECT_NEAR(gamma_default(1), 0.05004522643642805134, 1e-17);
  EXPECT_NEAR(gamma_default(2), 0.010883254609517693473, 1e-17);
  EXPECT_NEAR(gamma_default(5), 0.006535513282559800957, 1e-17);
  EXPECT_EQ(gamma_default(0), 0.0);
  EXPECT_EQ(gamma_default(-4), 0.0);
}

TEST(Gamma, PartialSums) {
  long double s = 0.0L;
  for (long long j = 1; j <= 1000; ++j) s += gamma_default(j);
  EXPECT_NEAR(static_cast<double>(s), 0.28066155225003321583, 1e-13);
  for (long long j = 1001; j <= 10000000; ++j) s += gamma_default(j);
  // The series converges very slowly; the partial sum at 1e7 is about 0.54,
  // the full series about 0.91. Either way the spending bound (<= 1) holds.
  EXPECT_NEAR(static_cast<double>(s), 0.5399077729, 1e-9);
  EXPECT_LE(static_cast<double>(s), 1.0);
}

TEST(Gamma, SequenceIsNonincreasing) {
  const auto g = GammaSequence::default_lord(5000);
  for (long long j = 2; j <= 6000; ++j) EXPECT_LE(g(j), g(j - 1)) << j;
  EXPECT_EQ(g(0), 0.0);
  EXPECT_EQ(g(6000), gamma_default(6000));  // past the horizon
}

TEST(Gamma, ExplicitValidation) {
  EXPECT_THROW(GammaSequence::from_values({0.5, 0.6}), std::invalid_argument);
  EXPECT_THROW(GammaSequence::from_values({0.6, 0.5}), std::invalid_argument);
  EXPECT_THROW(GammaSequence::from_values({0.5, -0.1}), std::invalid_argument);
  const auto g = GammaSequence::from_values({0.5, 0.25});
  EXPECT_EQ(g(2), 0.25);
  EXPECT_EQ(g(3), 0.0);
}

TEST(AlphaSpending, Values) {
  const auto g = GammaSequence::default_lord(100);
  EXPECT_NEAR(alpha_spending_level(1, 0.1, g), 0.005004522643642805, 1e-17);
  double total = 0.0;
  for (long long j = 1; j <= 100; ++j) {
    total += alpha_spending_level(j, 0.1, g);
    if (j > 1) {
      EXPECT_LE(alpha_spending_level(j, 0.1, g), alpha_spending_level(j - 1, 0.1, g));
    }
  }
  EXPECT_LE(total, 0.1);
  EXPECT_THROW(alpha_spending_level(0, 0.1, g), std::invalid_argument);
}

TEST(Scheduler, FreshLevel) {
  const auto s = LordCiScheduler::with_defaults(0.1, 10);
  EXPECT_NEAR(s.next_level(), 0.05 * 0.05004522643642805134, 1e-18);
  EXPECT_NEAR(s.next_level(), 0.0025022613, 1e-10);
  EXPECT_EQ(s.time(), 1u);
}

TEST(Scheduler, RecordDecision) {
  auto s = LordCiScheduler::with_defaults(0.1, 10);
  s.record_decision(1, false);
  EXPECT_EQ(s.time(), 2u);
  EXPECT_TRUE(s.selection_times().empty());
  auto t = LordCiScheduler::with_defaults(0.1, 10);
  t.record_decision(1, true);
  ASSERT_EQ(t.selection_times().size(), 1u);
  EXPECT_EQ(t.selection_times()[0], 1u);
  EXPECT_THROW(t.record_decision(1, true), std::logic_error);
  EXPECT_THROW(t.record_decision(3, true), std::logic_error);
}

TEST(Scheduler, SelectionAtCurrentTimeNotCounted) {
  auto s = LordCiScheduler::with_defaults(0.1, 10);
  const double before = s.next_level();
  s.record_decision(1, true, before);
  const auto& g = s.gamma();
  EXPECT_DOUBLE_EQ(s.next_level(), g(2) * 0.05 + (0.1 - 0.05) * g(1));
  EXPECT_DOUBLE_EQ(s.spent(), before);
}

TEST(Scheduler, ConstructorValidation) {
  const auto g = default_gamma(5);
  EXPECT_THROW(LordCiScheduler(0.0, 0.0, g), std::invalid_argument);
  EXPECT_THROW(LordCiScheduler(0.1, 0.1, g), std::invalid_argument);
  EXPECT_THROW(LordCiScheduler(0.1, 0.0, g), std::invalid_argument);
  EXPECT_THROW(LordCiScheduler(1.0, 0.5, g), std::invalid_argument);
  EXPECT_THROW(LordCiScheduler(0.1, 0.05, nullptr), std::invalid_argument);
}

TEST(SchedulerProperty, MatchesDirectFormula) {
  for (std::uint64_t c = 0; c < 500; ++c) {
    auto g = testing::case_rng(101, c);
    const auto h = testing::random_history(g, 1 + g() % 150, g.uniform());
    const double alpha = testing::uniform(g, 0.01, 0.5);
    const double w0 = alpha * testing::uniform(g, 0.05, 0.95);
    const auto s = replay(h, alpha, w0);
    EXPECT_NEAR(s.next_level() / level_oracle(h, alpha, w0), 1.0, 1e-14) << "case " << c;
  }
}

TEST(SchedulerProperty, InvariantOverRandomTraces) {
  for (std::uint64_t c = 0; c < 10000; ++c) {
    auto g = testing::case_rng(102, c);
    const std::size_t len = 1 + g() % 120;
    const double p = g.uniform();
    LordCiScheduler s(0.1, 0.05, default_gamma(len));
    double spent = 0.0;
    std::size_t sel = 0;
    for (std::size_t t = 1; t <= len; ++t) {
      const double level = s.next_level();
      ASSERT_GT(level, 0.0);
      const bool selected = g.bernoulli(p);
      spent += level;
      sel += selected ? 1 : 0;
      ASSERT_LE(spent, 0.1 * static_cast<double>(std::max<std::size_t>(sel, 1))) << "case " << c << " t " << t;
      s.record_decision(t, selected, level);
    }
    EXPECT_NEAR(s.spent(), spent, 1e-13);  // compensated vs naive summation
  }
}

TEST(SchedulerProperty, MonotoneInHistory) {
  for (std::uint64_t c = 0; c < 2000; ++c) {
    auto g = testing::case_rng(103, c);
    const std::size_t len = 1 + g() % 60;
    auto small = testing::random_history(g, len, 0.3);
    auto big = small;
    for (std::size_t t = 0; t < len; ++t) big[t] = big[t] || g.bernoulli(0.2);
    auto a = LordCiScheduler::with_defaults(0.1, len + 1);
    auto b = LordCiScheduler::with_defaults(0.1, len + 1);
    for (std::size_t t = 0; t < len; ++t) {
      ASSERT_GE(b.next_level(), a.next_level()) << "case " << c << " t " << t;
      a.record_decision(t + 1, small[t]);
      b.record_decision(t + 1, big[t]);
    }
    EXPECT_GE(b.next_level(), a.next_level());
  }
}

TEST(MemLevel, DecayOneIsIdentical) {
  for (std::uint64_t c = 0; c < 300; ++c) {
    auto g = testing::case_rng(104, c);
    const auto s = replay(testing::random_history(g, g() % 200, 0.2));
    EXPECT_EQ(s.mem_next_level(1.0), s.next_level());
  }
}

TEST(MemLevel, SelectionTermScaled) {
  // One selection at tau_1 = i - 5 with i = 6.
  auto s = LordCiScheduler::with_defaults(0.1, 10);
  s.record_decision(1, true);
  for (std::size_t t = 2; t <= 5; ++t) s.record_decision(t, false);
  ASSERT_EQ(s.time(), 6u);
  const auto& g = s.gamma();
  const double w0_term = g(6) * 0.05 * std::pow(0.99, 5.0);
  const double sel_term = s.mem_next_level(0.99) - w0_term;
  EXPECT_NEAR(sel_term / ((0.1 - 0.05) * g(5)), 0.9509900499, 1e-12);
  EXPECT_THROW((void)s.mem_next_level(0.0), std::invalid_argument);
  EXPECT_THROW((void)s.mem_next_level(1.5), std::invalid_argument);
}

TEST(MemLevel, DecayedInvariant) {
  for (std::uint64_t c = 0; c < 10000; ++c) {
    auto g = testing::case_rng(105, c);
    const std::size_t len = 1 + g() % 80;
    const double decay = testing::uniform(g, 0.8, 1.0);
    const double p = g.uniform();
    LordCiScheduler s(0.1, 0.05, default_gamma(len));
    std::vector<double> levels;
    std::vector<bool> sel;
    for (std::size_t t = 1; t <= len; ++t) {
      levels.push_back(s.mem_next_level(decay));
      sel.push_back(g.bernoulli(p));
      s.record_decision(t, sel.back(), levels.back());
      double lhs = 0.0;
      double rhs = 0.0;
      for (std::size_t i = 1; i <= t; ++i) {
        const double w = std::pow(decay, static_cast<double>(t - i));
        lhs += w * levels[i - 1];
        rhs += sel[i - 1] ? w : 0.0;
      }
      rhs = 0.1 * std::max(rhs, std::pow(decay, static_cast<double>(t - 1)));
      ASSERT_LE(lhs, rhs * (1.0 + 1e-12)) << "case " << c << " t " << t;
    }
  }
}

TEST(Snapshot, RestoreReproducesLevels) {
  auto g = testing::case_rng(106, 0);
  const auto h = testing::random_history(g, 50, 0.2);
  const auto s = replay(h);
  const auto r = LordCiScheduler::restore(s.alpha(), s.w0(), s.gamma_ptr(), s.time(), s.selection_times(), s.spent());
  EXPECT_EQ(r.next_level(), s.next_level());
  EXPECT_EQ(r.history(), h);
  EXPECT_THROW(LordCiScheduler::restore(0.1, 0.05, s.gamma_ptr(), 0, {}, 0.0), std::invalid_argument);
  EXPECT_THROW(LordCiScheduler::restore(0.1, 0.05, s.gamma_ptr(), 5, {3, 2}, 0.0), std::invalid_argument);
  EXPECT_THROW(LordCiScheduler::restore(0.1, 0.05, s.gamma_ptr(), 5, {5}, 0.0), std::invalid_argument);
}

}  // namespace
}  // namespace ofcr
