#include "csbp/stats.h"

#include <algorithm>
#include <cmath>
#include <thread>

#include "csbp/errors.h"
#include "csbp/numeric.h"

namespace csbp {

auto Mc_estimate::z() const -> double {
  if (!reference) throw Domain_error("z-score needs a reference value");
  auto diff = mean - *reference;
  if (std_error == 0.0) return diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff);
  return diff / std_error;
}

auto Mc_estimate::within(double sigmas, double slack) const -> bool {
  if (!reference) throw Domain_error("within needs a reference value");
  return std::abs(mean - *reference) <= sigmas * std_error + slack;
}

auto summarize(std::span<const double> xs) -> Mc_estimate {
  if (xs.size() < 2) throw Domain_error("summarize: need at least 2 samples");
  auto n = static_cast<double>(xs.size());
  auto mean = numeric::pairwise_sum(xs) / n;
  auto dev = std::vector<double>(xs.size());
  std::transform(xs.begin(), xs.end(), dev.begin(), [&](double x) { return (x - mean) * (x - mean); });
  auto var = numeric::pairwise_sum(dev) / (n - 1.0);
  return {xs.size(), mean, std::sqrt(var / n), std::nullopt};
}

void for_each_replica(const std::function<void(const Replica_streams&)>& body, std::size_t n,
                      std::uint64_t master_seed, unsigned threads) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  auto work = [&](unsigned w) {
    for (std::size_t i = w; i < n; i += threads) body(Replica_streams{master_seed, i});
  };
  if (threads == 1) {
    work(0);
    return;
  }
  auto pool = std::vector<std::thread>{};
  auto errors = std::vector<std::exception_ptr>(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        work(w);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

auto collect(const Replica_sampler& sampler, std::size_t n, std::uint64_t master_seed,
             unsigned threads) -> std::vector<double> {
  auto out = std::vector<double>(n);
  for_each_replica([&](const Replica_streams& rs) { out[rs.replica()] = sampler(rs); }, n,
                   master_seed, threads);
  return out;
}

auto estimate(const Replica_sampler& sampler, std::size_t n, std::uint64_t master_seed,
              unsigned threads) -> Mc_estimate {
  if (n < 2) throw Domain_error("estimate: need n >= 2");
  auto xs = collect(sampler, n, master_seed, threads);
  return summarize(xs);
}

auto ks_two_sample(std::vector<double> xs, std::vector<double> ys, double alpha) -> Ks_result {
  if (xs.size() < 100 || ys.size() < 100) throw Domain_error("ks_two_sample: need >= 100 samples each");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Domain_error("ks_two_sample: alpha must lie in (0,1)");
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  auto n = static_cast<double>(xs.size());
  auto m = static_cast<double>(ys.size());
  auto d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < xs.size() && j < ys.size()) {
    auto v = std::min(xs[i], ys[j]);
    while (i < xs.size() && xs[i] == v) ++i;
    while (j < ys.size() && ys[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  auto c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  auto threshold = c * std::sqrt((n + m) / (n * m));
  return {d, threshold, d <= threshold};
}

}  // namespace csbp
