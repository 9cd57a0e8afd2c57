#include <cmath>

#include <gtest/gtest.h>

#include "ofcr/posthoc.hpp"
#include "support.hpp"

namespace ofcr {
namespace {

// Independent evaluation in long double via log(1 + u) = 2 atanh(u / (2 + u)).
long double factor_oracle(long double a, long double delta) {
  const long double l = -std::log(delta);
  const long double u = l / a;
  return l / (a * 2.0L * std::atanh(u / (2.0L + u)));
}

TEST(PosthocFactor, ReferenceValues) {
  EXPECT_NEAR(posthoc_factor({1.0, 0.05}), 2.1626293571160794499, 1e-13);
  EXPECT_NEAR(posthoc_factor({0.5, 0.1}), 2.6716937137297709333, 1e-13);
  EXPECT_NEAR(posthoc_factor({2.0, 0.01}), 1.9273243891922539888, 1e-13);
  EXPECT_NEAR(posthoc_factor({10.0, 0.2}), 1.0784711238872851728, 1e-13);
}

TEST(PosthocFactor, GridAgainstOracle) {
  for (double a : {0.1, 0.5, 1.0, 2.0, 10.0}) {
    for (double delta : {0.01, 0.05, 0.1, 0.2}) {
      const double f = posthoc_factor({a, delta});
      EXPECT_NEAR(f, static_cast<double>(factor_oracle(a, delta)), 1e-10) << a << " " << delta;
      EXPECT_GT(f, 1.0);
    }
  }
}

TEST(PosthocBound, WorkedCase) {
  EXPECT_NEAR(bound_from_sums(0.5, 10.0, {1.0, 0.05}).value(), 0.32439440356741191749, 1e-12);
}

TEST(PosthocBound, VacuousWithoutSelections) {
  const std::vector<double> l = {0.01, 0.02};
  const bool s[] = {false, false};
  const auto b = fcp_upper_bound(l, s, {}, 2);
  EXPECT_TRUE(b.is_vacuous());
  EXPECT_TRUE(b.covers(1.0));
  EXPECT_EQ(b.value_or_inf(), kInf);
  EXPECT_THROW((void)b.value(), std::logic_error);
}

TEST(PosthocBound, Validation) {
  const std::vector<double> l = {0.01};
  const bool s[] = {true};
  EXPECT_THROW(fcp_upper_bound(l, s, {0.0, 0.05}, 1), std::invalid_argument);
  EXPECT_THROW(fcp_upper_bound(l, s, {1.0, 1.0}, 1), std::invalid_argument);
  EXPECT_THROW(fcp_upper_bound(l, s, {}, 0), std::invalid_argument);
  EXPECT_THROW(fcp_upper_bound(l, s, {}, 2), std::invalid_argument);
}

TEST(PosthocProperty, TrackMatchesPointwise) {
  for (std::uint64_t c = 0; c < 300; ++c) {
    auto g = testing::case_rng(501, c);
    const std::size_t len = 1 + g() % 100;
    std::vector<double> l(len);
    auto s = std::make_unique<bool[]>(len);
    for (std::size_t i = 0; i < len; ++i) {
      l[i] = testing::uniform(g, 1e-5, 0.1);
      s[i] = g.bernoulli(0.2);
    }
    const PosthocConfig cfg{testing::uniform(g, 0.1, 5.0), testing::uniform(g, 0.01, 0.5)};
    const std::span<const bool> sel(s.get(), len);
    const auto track = track_uniform_bound(l, sel, cfg);
    ASSERT_EQ(track.size(), len);
    for (std::size_t n = 1; n <= len; ++n) {
      EXPECT_EQ(track[n - 1].n, n);
      EXPECT_EQ(track[n - 1].bound, fcp_upper_bound(l, sel, cfg, n));
    }
  }
}

}  // namespace
}  // namespace ofcr
