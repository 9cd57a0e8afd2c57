#include <cmath>

#include <gtest/gtest.h>

#include "ofcr/normal.hpp"

namespace ofcr::normal {
namespace {

// Reference values below were computed with 40-digit arithmetic (mpmath).

TEST(Quantile, KnownUpperQuantiles) {
  EXPECT_NEAR(upper_quantile(0.05), 1.6448536269514722, 1e-13);
  EXPECT_NEAR(upper_quantile(0.1), 1.2815515655446004, 1e-13);
  EXPECT_NEAR(upper_quantile(0.025), 1.959963984540054, 1e-13);
  EXPECT_NEAR(upper_quantile(0.001), 3.090232306167813, 1e-12);
  EXPECT_NEAR(quantile(0.5), 0.0, 1e-15);
}

TEST(Quantile, OutsideUnitIntervalIsNaN) {
  EXPECT_TRUE(std::isnan(quantile(0.0)));
  EXPECT_TRUE(std::isnan(quantile(1.0)));
  EXPECT_TRUE(std::isnan(upper_quantile(-0.1)));
}

TEST(Quantile, RoundTripsThroughCdf) {
  for (double p = 1e-300; p < 0.5; p *= 3.7) {
    EXPECT_NEAR(upper_tail(upper_quantile(p)) / p, 1.0, 1e-12) << p;
    EXPECT_NEAR(cdf(quantile(p)) / p, 1.0, 1e-12) << p;
  }
}

TEST(Tails, Symmetry) {
  for (double t = -8.0; t <= 8.0; t += 0.37) {
    EXPECT_NEAR(cdf(t) + cdf(-t), 1.0, 1e-15);
    EXPECT_DOUBLE_EQ(upper_tail(t), cdf(-t));
  }
}

TEST(Tails, LogUpperTailFarOut) {
  EXPECT_NEAR(log_upper_tail(31.0), -484.85396362717928858, 1e-9);
  EXPECT_NEAR(log_upper_tail(35.0), -616.97510126192251347, 1e-9);
  EXPECT_NEAR(log_upper_tail(40.0), -804.60844201375378817, 1e-9);
  EXPECT_NEAR(log_upper_tail(50.0), -1254.8313611394199013, 1e-9);
}

TEST(Tails, LogUpperTailContinuousAcrossBranches) {
  for (double t : {-5.0, 30.0}) {
    EXPECT_NEAR(log_upper_tail(std::nextafter(t, -1e9)), log_upper_tail(std::nextafter(t, 1e9)), 1e-12);
  }
  EXPECT_NEAR(log_upper_tail(-40.0), 0.0, 1e-300);
}

TEST(Tails, LogTailRatio) {
  EXPECT_NEAR(log_tail_ratio(40.0, 35.0), -187.63334075183127469, 1e-9);
  EXPECT_NEAR(log_tail_ratio(32.0, 31.0), -31.531684998546085593, 1e-9);
  EXPECT_NEAR(log_tail_ratio(1.0, 2.0), std::log(upper_tail(1.0) / upper_tail(2.0)), 1e-13);
}

TEST(Tails, MassBetween) {
  EXPECT_NEAR(mass_between(-1.0, 1.0), 0.68268949213708589717, 1e-15);
  EXPECT_NEAR(mass_between(8.0, 9.0) / 6.2198319858658302829e-16, 1.0, 1e-12);
  EXPECT_NEAR(mass_between(-9.0, -8.0) / 6.2198319858658302829e-16, 1.0, 1e-12);
  EXPECT_EQ(mass_between(1.0, 1.0), 0.0);
  EXPECT_EQ(mass_between(2.0, 1.0), 0.0);
}

}  // namespace
}  // namespace ofcr::normal
