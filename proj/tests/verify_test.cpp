#include <gtest/gtest.h>

#include <cmath>

#include "csbp/errors.h"
#include "csbp/verify.h"

namespace csbp {
namespace {

TEST(ConditionalBinner, CountsAndTolerances) {
  auto b = Conditional_binner{0.25, 1.0, 0.01};
  EXPECT_EQ(b.bins(), 4u);
  b.add(0.10, 0.10);    // bin 0, gap 0
  b.add(0.30, 0.295);   // bin 1, gap delta/2
  b.add(0.30, 0.29);    // bin 1, gap delta
  b.add(0.30, 0.28);    // bin 1, gap 2 delta
  b.add(0.30, 0.20);    // bin 1, not simultaneous
  b.add(never, 0.5);    // censored
  b.add(1.5, 1.5);      // beyond the last bin
  EXPECT_EQ(b.total(0), 1);
  EXPECT_EQ(b.total(1), 4);
  EXPECT_EQ(b.simultaneous(0), 1);
  EXPECT_EQ(b.simultaneous(1, 0), 1);
  EXPECT_EQ(b.simultaneous(1, 1), 2);
  EXPECT_EQ(b.simultaneous(1, 2), 3);
  EXPECT_EQ(b.censored(), 2);
  EXPECT_DOUBLE_EQ(b.lower(1), 0.25);
  EXPECT_DOUBLE_EQ(b.upper(1), 0.5);
  EXPECT_THROW(b.simultaneous(0, 3), Domain_error);
}

TEST(ConditionalBinner, RejectsBadGeometry) {
  EXPECT_THROW(Conditional_binner(0.0, 1.0, 0.01), Domain_error);
  EXPECT_THROW(Conditional_binner(0.5, 0.25, 0.01), Domain_error);
  EXPECT_THROW(Conditional_binner(0.25, 1.0, 0.0), Domain_error);
}

TEST(ExtinctionTable, NoMutationMeansAlwaysSimultaneous) {
  auto split = Mutation_split{{{0.0, 1.0, Levy_measure::zero()}, Levy_measure::zero(), 0.0}};
  auto k = Extinction_kernel{split.total()};
  auto cfg = Extinction_table_config{};
  cfg.delta = 1e-2;
  cfg.n = 500;
  cfg.max_time = 5.0;
  cfg.min_events = 20;
  auto t = conditional_extinction_table(split, k, cfg);
  ASSERT_GT(t.populated(), 0u);
  for (const auto& b : t.bins) {
    EXPECT_EQ(b.p_formula, 1.0);
    if (b.events > 0) EXPECT_EQ(b.p_hat, 1.0);
  }
  EXPECT_EQ(t.passed(), t.populated());
}

TEST(ExtinctionTable, ImmigrationMatchesExponential) {
  // nu = 0: P(simultaneous | tau = m) = exp(-alpha_imm m).
  auto split = Mutation_split{{{0.1, 1.0, Levy_measure::zero()}, Levy_measure::zero(), 0.5}};
  auto k = Extinction_kernel{split.total()};
  auto cfg = Extinction_table_config{};
  cfg.delta = 5e-3;
  cfg.n = 3000;
  cfg.max_time = 5.0;
  cfg.seed = 7;
  auto t = conditional_extinction_table(split, k, cfg);
  ASSERT_GE(t.populated(), 4u);
  EXPECT_GE(t.passed() + 1, t.populated());
  for (const auto& b : t.bins) {
    EXPECT_NEAR(b.p_formula, std::exp(-0.5 * b.m_mid), 1e-10);
    if (b.events == 0) continue;
    // Averaged over extinction times inside the bin.
    EXPECT_LE(b.p_formula_events, std::exp(-0.5 * b.lo) + 1e-12);
    EXPECT_GE(b.p_formula_events, std::exp(-0.5 * b.hi) - 1e-12);
  }
}

TEST(ExtinctionTable, ThreadCountDoesNotChangeResult) {
  auto split = Mutation_split{{{0.1, 1.0, Levy_measure::zero()}, Levy_measure::zero(), 0.5}};
  auto k = Extinction_kernel{split.total()};
  auto cfg = Extinction_table_config{};
  cfg.delta = 1e-2;
  cfg.n = 200;
  cfg.max_time = 5.0;
  auto a = conditional_extinction_table(split, k, cfg);
  cfg.threads = 3;
  auto b = conditional_extinction_table(split, k, cfg);
  ASSERT_EQ(a.bins.size(), b.bins.size());
  for (std::size_t i = 0; i < a.bins.size(); ++i) {
    EXPECT_EQ(a.bins[i].events, b.bins[i].events);
    EXPECT_EQ(a.bins[i].simultaneous, b.bins[i].simultaneous);
  }
}

TEST(Acceptance, Registry) {
  auto ids = acceptance_ids();
  ASSERT_EQ(ids.size(), 10u);
  EXPECT_EQ(ids.front(), "A1");
  EXPECT_EQ(ids.back(), "A10");
  EXPECT_THROW(run_acceptance("A11", {}), Domain_error);
}

class Deterministic_criteria : public testing::TestWithParam<const char*> {};

TEST_P(Deterministic_criteria, Pass) {
  auto v = run_acceptance(GetParam(), {});
  EXPECT_TRUE(v.pass) << v.id << " estimate " << v.estimate << " target " << v.target;
  EXPECT_LE(v.estimate, v.target);
  EXPECT_LT(v.seconds, 1.0);
}

INSTANTIATE_TEST_SUITE_P(Acceptance, Deterministic_criteria, testing::Values("A1", "A2", "A3", "A9"));

class Sampled_criteria : public testing::TestWithParam<const char*> {};

TEST_P(Sampled_criteria, PassAtReducedScale) {
  auto cfg = Acceptance_config{};
  cfg.scale = 0.05;
  auto v = run_acceptance(GetParam(), cfg);
  EXPECT_TRUE(v.pass) << v.id << " z " << v.z;
  EXPECT_GT(v.std_error, 0.0);
}

INSTANTIATE_TEST_SUITE_P(Acceptance, Sampled_criteria, testing::Values("A5", "A7", "A8", "A10"));

}  // namespace
}  // namespace csbp
