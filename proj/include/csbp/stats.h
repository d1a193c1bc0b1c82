#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "csbp/rng.h"

namespace csbp {

struct Mc_estimate {
  std::size_t n = 0;
  double mean = 0.0;
  double std_error = 0.0;
  // (mean - reference) / stderr when a reference is attached.
  std::optional<double> reference;

  auto z() const -> double;
  auto within(double sigmas, double slack = 0.0) const -> bool;
};

// Mean and standard error of xs (pairwise sums; order-deterministic).
auto summarize(std::span<const double> xs) -> Mc_estimate;

// Runs sampler(replica, streams) for replica = 0..n-1 on up to `threads`
// workers. Each replica owns its counter-based streams, so the result is a
// pure function of (master_seed, n) whatever the thread count.
using Replica_sampler = std::function<double(const Replica_streams&)>;
auto estimate(const Replica_sampler& sampler, std::size_t n, std::uint64_t master_seed,
              unsigned threads = 1) -> Mc_estimate;

// Calls body for replica = 0..n-1 (replica() indexes the output) on up to
// `threads` workers; body may only write replica-owned storage.
void for_each_replica(const std::function<void(const Replica_streams&)>& body, std::size_t n,
                      std::uint64_t master_seed, unsigned threads = 1);

// Same fan-out, returning all draws in replica order.
auto collect(const Replica_sampler& sampler, std::size_t n, std::uint64_t master_seed,
             unsigned threads = 1) -> std::vector<double>;

struct Ks_result {
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

// Classical two-sample Kolmogorov-Smirnov test with the asymptotic critical
// value c(alpha) sqrt((n + m) / (n m)), c(alpha) = sqrt(-ln(alpha / 2) / 2).
auto ks_two_sample(std::vector<double> xs, std::vector<double> ys, double alpha) -> Ks_result;

}  // namespace csbp
