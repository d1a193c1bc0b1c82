#include <gtest/gtest.h>

#include <cmath>

#include "csbp/errors.h"
#include "csbp/stats.h"

namespace csbp {
namespace {

TEST(Estimate, ConstantSamplerHasZeroError) {
  auto e = estimate([](const Replica_streams&) { return 2.5; }, 100, 1);
  EXPECT_EQ(e.mean, 2.5);
  EXPECT_EQ(e.std_error, 0.0);
}

TEST(Estimate, BernoulliHalf) {
  auto coin = [](const Replica_streams& s) {
    auto g = s.stream(Stream_role::generic);
    return g.uniform() < 0.5 ? 1.0 : 0.0;
  };
  auto e = estimate(coin, 1'000'000, 7);
  EXPECT_NEAR(e.mean, 0.5, 3 * 0.0005);
  EXPECT_NEAR(e.std_error, 0.0005, 1e-6);
}

TEST(Estimate, DeterministicAcrossThreadCounts) {
  auto f = [](const Replica_streams& s) {
    auto g = s.stream(Stream_role::generic);
    return g.uniform() + g.uniform();
  };
  auto a = estimate(f, 5000, 42, 1);
  auto b = estimate(f, 5000, 42, 4);
  auto c = estimate(f, 5000, 42, 1);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_EQ(a.mean, c.mean);
  EXPECT_NE(a.mean, estimate(f, 5000, 43, 1).mean);
}

TEST(Estimate, StandardErrorScalesAsInverseRootN) {
  auto f = [](const Replica_streams& s) {
    auto g = s.stream(Stream_role::generic);
    return g.uniform();
  };
  auto prev = estimate(f, 1000, 3).std_error;
  for (std::size_t n : {10'000u, 100'000u}) {
    auto se = estimate(f, n, 3).std_error;
    EXPECT_NEAR(prev / se, std::sqrt(10.0), 0.2 * std::sqrt(10.0));
    prev = se;
  }
}

TEST(Estimate, ZScore) {
  auto e = Mc_estimate{10, 1.2, 0.1, 1.0};
  EXPECT_NEAR(e.z(), 2.0, 1e-12);
  EXPECT_TRUE(e.within(3.0));
  EXPECT_FALSE(e.within(1.0));
  EXPECT_THROW(Mc_estimate{}.z(), Domain_error);
}

TEST(Ks, IdenticalSamplesPass) {
  auto xs = std::vector<double>{};
  for (int i = 0; i < 500; ++i) xs.push_back(std::sin(i));
  auto r = ks_two_sample(xs, xs, 0.01);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(Ks, ShiftedUniformFails) {
  auto g = Philox{1, 0};
  auto xs = std::vector<double>{};
  auto ys = std::vector<double>{};
  for (int i = 0; i < 10000; ++i) {
    xs.push_back(g.uniform());
    ys.push_back(0.5 + g.uniform());
  }
  auto r = ks_two_sample(xs, ys, 0.01);
  EXPECT_NEAR(r.statistic, 0.5, 0.03);
  EXPECT_NEAR(r.threshold, 1.6276 * std::sqrt(2.0 / 10000), 1e-4);
  EXPECT_FALSE(r.pass);
}

TEST(Ks, IndependentUniformsPassAtNominalRate) {
  auto passes = 0;
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    auto g = Philox{99, rep};
    auto xs = std::vector<double>(2000);
    auto ys = std::vector<double>(2000);
    for (auto& x : xs) x = g.uniform();
    for (auto& y : ys) y = g.uniform();
    passes += ks_two_sample(xs, ys, 0.05).pass;
  }
  // Binomial(200, 0.95): mean 190, sd ~3.1.
  EXPECT_GE(passes, 180);
}

TEST(Ks, RejectsSmallSamples) {
  EXPECT_THROW(ks_two_sample(std::vector<double>(50), std::vector<double>(500), 0.01), Domain_error);
}

}  // namespace
}  // namespace csbp
