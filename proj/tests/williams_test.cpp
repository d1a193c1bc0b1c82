#include <gtest/gtest.h>

#include <cmath>

#include "csbp/errors.h"
#include "csbp/williams.h"

namespace csbp {
namespace {

auto plain(double alpha0, double beta) -> Mutation_split {
  return Mutation_split{{{alpha0, beta, Levy_measure::zero()}, Levy_measure::zero(), 0.0}};
}

auto a5_split() -> Mutation_split {
  return Mutation_split{{{0.0, 1.0, Levy_measure::atoms({{1.0, 1.0}})},
                         Levy_measure::atoms({{1.0, 0.5}}),
                         0.2}};
}

auto options(double eps, double delta) -> Williams_options {
  auto o = Williams_options{};
  o.eps = eps;
  o.delta = delta;
  return o;
}

TEST(Decomposer, ExpectedGraftCountDriftOnly) {
  auto split = plain(0.0, 1.0);
  auto k = Extinction_kernel{split.total()};
  auto d = Decomposer{split, k, options(0.01, 0.01)};
  // 2 int_0^1 (100 - 1/(1-t))^+ dt = 2 (100 * 0.99 - ln 100).
  auto exact = 2.0 * (100.0 * 0.99 - std::log(100.0));
  auto spine = Spine_measure{1.0, {}, 2.0};
  EXPECT_NEAR(d.expected_graft_count(spine), exact, 1e-7 * exact);
  EXPECT_NEAR(exact, 188.79, 0.01);

  auto counts = std::vector<double>(2000);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    auto s = d.assemble(1.0, Replica_streams{1, i}, {never, false});
    EXPECT_EQ(s.spine.count(), 0u);
    counts[i] = static_cast<double>(s.accepted);
  }
  auto e = summarize(counts);
  e.reference = exact;
  EXPECT_TRUE(e.within(3.0)) << e.mean;
}

TEST(Decomposer, ExpectedGraftCountWithAtoms) {
  auto split = a5_split();
  auto k = Extinction_kernel{split.total()};
  auto d = Decomposer{split, k, options(0.01, 0.01)};
  auto counts = std::vector<double>(3000);
  auto expected = std::vector<double>(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    auto s = d.assemble(1.0, Replica_streams{2, i}, {never, false});
    counts[i] = static_cast<double>(s.accepted);
    expected[i] = d.expected_graft_count(s.spine);
  }
  // E[accepted | spine] = expected_graft_count(spine); compare the residuals.
  auto residual = std::vector<double>(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) residual[i] = counts[i] - expected[i];
  auto e = summarize(residual);
  e.reference = 0.0;
  EXPECT_TRUE(e.within(3.0)) << e.mean;
}

TEST(Decomposer, SampleInvariants) {
  auto split = a5_split();
  auto k = Extinction_kernel{split.total()};
  auto d = Decomposer{split, k, options(0.01, 0.01)};
  for (std::uint64_t i = 0; i < 100; ++i) {
    auto m = 0.3 + 0.017 * static_cast<double>(i);
    auto s = d.assemble(m, Replica_streams{3, i});
    const auto& total = s.aggregate.total;
    const auto& eve = s.aggregate.eve;
    ASSERT_EQ(total.size(), static_cast<std::size_t>(std::floor(m / 0.01 * (1 + 1e-12))) + 1);
    EXPECT_EQ(total.at(0), 0.0);
    EXPECT_LE(total.extinction_time, std::ceil(m / 0.01 - 1e-9) * 0.01 + 1e-12);
    for (std::size_t j = 0; j < total.size(); ++j) EXPECT_LE(eve.at(j), total.at(j) * (1 + 1e-12));

    auto sum_total = std::vector<double>(total.size(), 0.0);
    auto sum_eve = std::vector<double>(total.size(), 0.0);
    for (const auto& g : s.grafts) {
      EXPECT_LT(g.t_graft, m);
      EXPECT_EQ(g.eve_typed, g.t_graft < s.clock.t0);
      if (!g.eve_typed) EXPECT_TRUE(g.eve.values.empty());
      EXPECT_LE(g.total.extinction_time, std::ceil(m / 0.01 - 1e-9) * 0.01 + 1e-12);
      auto first = static_cast<std::size_t>(std::llround(g.total.t0 / 0.01));
      for (std::size_t j = 0; j < g.total.size(); ++j) {
        if (first + j < sum_total.size()) sum_total[first + j] += g.total.values[j];
      }
      for (std::size_t j = 0; j < g.eve.size(); ++j) {
        if (first + j < sum_eve.size()) sum_eve[first + j] += g.eve.values[j];
      }
    }
    for (std::size_t j = 0; j < total.size(); ++j) {
      EXPECT_NEAR(sum_total[j], total.values[j], 1e-12 * (1 + total.values[j]));
      EXPECT_NEAR(sum_eve[j], eve.values[j], 1e-12 * (1 + eve.values[j]));
    }
  }
}

TEST(Decomposer, ClockMatchesAssembleAndFormula) {
  auto split = a5_split();
  auto k = Extinction_kernel{split.total()};
  auto d = Decomposer{split, k, options(0.01, 0.01)};
  for (std::uint64_t i = 0; i < 30; ++i) {
    auto rs = Replica_streams{4, i};
    auto c = d.sample_clock(1.0, rs);
    auto s = d.assemble(1.0, rs, {never, false});
    EXPECT_EQ(c.clock.t0, s.clock.t0);
    EXPECT_EQ(c.spine.count(), s.spine.count());
  }
  auto hits = std::vector<double>(20'000);
  for (std::size_t i = 0; i < hits.size(); ++i) {
    hits[i] = d.sample_clock(1.0, Replica_streams{5, i}).clock.simultaneous();
  }
  auto e = summarize(hits);
  e.reference = simultaneous_extinction_prob(k, split, 1.0);
  EXPECT_TRUE(e.within(3.0)) << e.z();
}

TEST(Decomposer, ObservationWindowKeepsTheLaw) {
  auto split = a5_split();
  auto k = Extinction_kernel{split.total()};
  auto d = Decomposer{split, k, options(0.01, 0.01)};
  auto full = std::vector<double>(3000);
  auto cut = std::vector<double>(3000);
  for (std::size_t i = 0; i < full.size(); ++i) {
    full[i] = d.assemble(1.2, Replica_streams{6, i}, {never, false}).aggregate.total.at(40);
    auto s = d.assemble(1.2, Replica_streams{7, i}, {0.4, false});
    ASSERT_EQ(s.aggregate.total.size(), 41u);
    cut[i] = s.aggregate.total.at(40);
  }
  EXPECT_TRUE(ks_two_sample(full, cut, 0.01).pass);
}

TEST(Decomposer, Errors) {
  auto split = plain(0.0, 1.0);
  auto k = Extinction_kernel{split.total()};
  auto d = Decomposer{split, k, options(0.01, 0.01)};
  EXPECT_THROW(d.assemble(0.005, Replica_streams{1, 0}), Domain_error);
  auto small = options(1e-4, 0.01);
  small.max_expected_candidates = 1000.0;
  auto tight = Decomposer{split, k, small};
  EXPECT_THROW(tight.assemble(1.0, Replica_streams{1, 0}), Config_error);
  EXPECT_THROW(Decomposer(split, k, options(0.01, 0.0)), Domain_error);
}

TEST(LaplaceEstimate, ZeroFunctional) {
  auto split = a5_split();
  auto k = Extinction_kernel{split.total()};
  auto d = Decomposer{split, k, options(0.01, 0.01)};
  auto e = laplace_estimate(d, Test_functional{{0.5}, {0.0}, {0.0}}, {100, 8.0, 1, 1, true});
  EXPECT_EQ(e.value.mean, 0.0);
  EXPECT_EQ(e.value.std_error, 0.0);
  EXPECT_EQ(truncation_bias_budget(d, Test_functional{}), 0.0);
}

TEST(LaplaceEstimate, BiasBudgetQuadratic) {
  // psi'' = 2 beta, so the budget is eps * w * 2 * int_a^inf |c'| = 2 eps w c(a).
  auto split = plain(0.0, 1.0);
  auto k = Extinction_kernel{split.total()};
  auto d = Decomposer{split, k, options(1e-3, 0.01)};
  EXPECT_NEAR(truncation_bias_budget(d, single_atom(0.5, 0.0, 1.0)), 2e-3 * 2.0, 1e-9);
  EXPECT_NEAR(truncation_bias_budget(d, Test_functional{{0.5, 0.8}, {0.7, 0.0}, {0.0, 0.3}}),
              2e-3 * (0.7 * 2.0 + 0.3 * 1.25), 1e-9);
}

TEST(LaplaceEstimate, Errors) {
  auto split = a5_split();
  auto k = Extinction_kernel{split.total()};
  auto d = Decomposer{split, k, options(0.01, 0.01)};
  EXPECT_THROW(laplace_estimate(d, single_atom(0.505, 0.0, 1.0), {100, 8.0, 1, 1, true}), Domain_error);
  EXPECT_THROW(laplace_estimate(d, single_atom(0.5, 0.0, 1.0), {100, 0.4, 1, 1, true}), Domain_error);
}

TEST(LaplaceEstimate, TotalMassMatchesCumulant) {
  // mu_total = delta_a, m over (0, inf): target N[1 - e^{-Y_a}] = u(1, a).
  auto split = plain(0.0, 1.0);
  auto k = Extinction_kernel{split.total()};
  auto d = Decomposer{split, k, options(1e-3, 0.01)};
  auto f = single_atom(0.5, 0.0, 1.0);
  auto e = laplace_estimate(d, f, {2000, 4.0, 11, 1, true});
  auto target = k.u(1.0, 0.5);
  EXPECT_LT(e.bias_budget, 0.01 * target);
  EXPECT_LE(std::abs(e.value.mean - target), 3.0 * e.value.std_error + e.bias_budget)
      << e.value.mean << " +- " << e.value.std_error << " vs " << target;
  EXPECT_NEAR(e.tail_bound, 0.25, 1e-12);
  EXPECT_NEAR(e.window_weight, 2.0 - 0.25, 1e-12);
}

TEST(LaplaceEstimate, EveFunctionalMatchesOde) {
  auto split = Mutation_split{{{0.1, 1.0, Levy_measure::zero()}, Levy_measure::zero(), 0.5}};
  auto k = Extinction_kernel{split.total()};
  auto d = Decomposer{split, k, options(1e-3, 0.01)};
  auto f = single_atom(0.5, 0.7, 0.0);
  auto e = laplace_estimate(d, f, {2000, 8.0, 12, 1, true});
  auto w0 = w_at_zero(solve(split, k, f, never)).first;
  EXPECT_LE(std::abs(e.value.mean - w0), 3.0 * e.value.std_error + e.bias_budget)
      << e.value.mean << " +- " << e.value.std_error << " vs " << w0;
}

TEST(LaplaceEstimate, DeterministicAcrossThreads) {
  auto split = a5_split();
  auto k = Extinction_kernel{split.total()};
  auto d = Decomposer{split, k, options(0.01, 0.01)};
  auto f = Test_functional{{0.5, 0.8}, {0.7, 0.0}, {0.0, 0.3}};
  auto a = laplace_estimate(d, f, {64, 8.0, 3, 1, true});
  auto b = laplace_estimate(d, f, {64, 8.0, 3, 3, true});
  EXPECT_EQ(a.value.mean, b.value.mean);
  EXPECT_EQ(a.value.std_error, b.value.std_error);
}

}  // namespace
}  // namespace csbp
