#pragma once

#include <cmath>
#include <cstdint>

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include "csbp/rng.h"

// Thin wrappers over Boost.Random distributions. Boost's algorithms are
// fixed across platforms, unlike the <random> ones, so a seed reproduces
// bit for bit everywhere.
namespace csbp::draw {

inline auto exponential(double mean, Philox& g) -> double { return -mean * std::log(g.uniform()); }

inline auto poisson(double mean, Philox& g) -> std::int64_t {
  if (!(mean > 0.0)) return 0;
  return boost::random::poisson_distribution<std::int64_t, double>{mean}(g);
}

inline auto gamma(double shape, double scale, Philox& g) -> double {
  return boost::random::gamma_distribution<double>{shape, scale}(g);
}

inline auto normal(Philox& g) -> double { return boost::random::normal_distribution<double>{}(g); }

inline auto bernoulli(double p, Philox& g) -> bool { return g.uniform() < p; }

}  // namespace csbp::draw
