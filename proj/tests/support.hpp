#pragma once

// Hand-rolled generators for property tests. Every generator is a pure
// function of (seed, case index), so a failing case can be replayed alone.

#include <cmath>
#include <cstdint>
#include <vector>

#include "ofcr/interval.hpp"
#include "ofcr/rng.hpp"

namespace ofcr::testing {

inline rng::Philox4x32 case_rng(std::uint64_t seed, std::uint64_t index) { return {seed, index}; }

inline std::vector<bool> random_history(rng::Philox4x32& g, std::size_t len, double p_select) {
  std::vector<bool> h(len);
  for (std::size_t i = 0; i < len; ++i) h[i] = g.bernoulli(p_select);
  return h;
}

inline double uniform(rng::Philox4x32& g, double lo, double hi) { return lo + (hi - lo) * g.uniform(); }

/// Levels spread over several decades, always inside (0, 1).
inline double random_level(rng::Philox4x32& g) { return std::pow(10.0, uniform(g, -6.0, -0.05)); }

/// Observations: mostly moderate, sometimes far in a tail.
inline double random_observation(rng::Philox4x32& g) {
  const double u = g.uniform();
  if (u < 0.8) return uniform(g, -5.0, 5.0);
  return uniform(g, -40.0, 40.0);
}

inline Interval random_interval(rng::Philox4x32& g) {
  const double a = uniform(g, -5.0, 5.0);
  const double b = a + uniform(g, 0.0, 4.0);
  if (a == b) return Interval::point(a);
  return Interval(a, b, g.bernoulli(0.5), g.bernoulli(0.5));
}

}  // namespace ofcr::testing
