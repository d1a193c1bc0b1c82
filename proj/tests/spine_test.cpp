#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "csbp/errors.h"
#include "csbp/spine.h"
#include "csbp/stats.h"

namespace csbp {
namespace {

auto quad(double a, double b) -> Mechanism { return Mechanism{{a, b, Levy_measure::zero()}}; }

auto a5_split() -> Mutation_split {
  return Mutation_split{{{0.0, 1.0, Levy_measure::atoms({{1.0, 1.0}})},
                         Levy_measure::atoms({{1.0, 0.5}}),
                         0.2}};
}

auto gk(const std::function<double(double)>& f, double a, double b) -> double {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-12);
}

TEST(SampleM, Examples) {
  auto k = Extinction_kernel{quad(0.0, 1.0)};
  auto g = Philox{1, 0};
  EXPECT_EQ(sample_m(k, 1.5, 1.5, g), 1.5);
  EXPECT_THROW(sample_m(k, 2.0, 1.0, g), Domain_error);
  EXPECT_THROW(sample_m(k, 0.0, 1.0, g), Domain_error);

  auto above = std::vector<double>(100'000);
  for (auto& a : above) {
    auto m = sample_m(k, 1.0, never, g);
    ASSERT_GE(m, 1.0);
    a = m > 2.0;
  }
  auto e = summarize(above);
  e.reference = 0.5;  // c(2) / c(1)
  EXPECT_TRUE(e.within(3.0)) << e.mean;
}

TEST(SampleM, StableMedian) {
  auto k = Extinction_kernel{Mechanism{{0.0, 0.0, Levy_measure::power_law(1.5)}}};
  auto g = Philox{2, 0};
  auto below = std::vector<double>(100'000);
  for (auto& b : below) b = sample_m(k, 1.0, never, g) <= std::sqrt(2.0);
  auto e = summarize(below);
  e.reference = 0.5;  // c(m) = 4 / m^2
  EXPECT_TRUE(e.within(3.0)) << e.mean;
}

TEST(SampleM, BoundedWindowInverseTransform) {
  auto k = Extinction_kernel{Mechanism{{0.0, 1.0, Levy_measure::atoms({{1.0, 1.0}})}}};
  auto g = Philox{3, 0};
  auto below = std::vector<double>(50'000);
  for (auto& b : below) {
    auto m = sample_m(k, 0.5, 3.0, g);
    ASSERT_GE(m, 0.5);
    ASSERT_LE(m, 3.0);
    b = m <= 1.0;
  }
  auto e = summarize(below);
  e.reference = (k.c(0.5) - k.c(1.0)) / (k.c(0.5) - k.c(3.0));
  EXPECT_TRUE(e.within(3.0)) << e.mean;
}

TEST(SampleSpine, NoJumpsMeansNoAtoms) {
  auto mech = quad(0.0, 1.5);
  auto k = Extinction_kernel{mech};
  auto g = Philox{4, 0};
  for (int i = 0; i < 100; ++i) {
    auto s = sample_spine(mech, k, 2.0, g);
    EXPECT_EQ(s.count(), 0u);
    EXPECT_EQ(s.drift, 3.0);
    EXPECT_EQ(spine_drift_density(k, s, 1.0), 3.0);
  }
  EXPECT_THROW(sample_spine(mech, k, 0.0, g), Domain_error);
  EXPECT_THROW(sample_spine(quad(0.0, 1.0), k, 1.0, g), Domain_error);
}

TEST(SampleSpine, ExpectedCountAtoms) {
  auto mech = Mechanism{{0.0, 1.0, Levy_measure::atoms({{1.0, 1.0}})}};
  auto k = Extinction_kernel{mech};
  for (double m : {1.0, 3.0}) {
    auto oracle = gk([&](double s) { return std::exp(-k.c_direct(s)); }, 0.0, m);
    EXPECT_NEAR(expected_spine_count(mech, k, m), oracle, 1e-8 * oracle);
    auto g = Philox{5, static_cast<std::uint64_t>(m)};
    auto counts = std::vector<double>(10'000);
    for (auto& c : counts) c = static_cast<double>(sample_spine(mech, k, m, g).count());
    auto e = summarize(counts);
    e.reference = oracle;
    EXPECT_TRUE(e.within(3.0)) << "m " << m << " z " << e.z();
  }
}

TEST(SampleSpine, AtomsSortedInsideHorizon) {
  auto split = a5_split();
  auto k = Extinction_kernel{split.total()};
  auto g = Philox{6, 0};
  for (int i = 0; i < 1000; ++i) {
    auto s = sample_spine(split, k, 2.0, g);
    for (std::size_t j = 0; j < s.count(); ++j) {
      EXPECT_GE(s.atoms[j].t, 0.0);
      EXPECT_LT(s.atoms[j].t, 2.0);
      EXPECT_EQ(s.atoms[j].ell, 1.0);
      EXPECT_FALSE(s.atoms[j].v.has_value());
      if (j > 0) EXPECT_LE(s.atoms[j - 1].t, s.atoms[j].t);
    }
  }
}

TEST(SampleSpine, SymmetricMarks) {
  auto split = a5_split();
  auto k = Extinction_kernel{split.total()};
  auto g = Philox{7, 0};
  auto marks = std::vector<double>{};
  while (marks.size() < 20'000) {
    for (const auto& a : sample_spine(split, k, 3.0, g).atoms) marks.push_back(a.z);
  }
  auto e = summarize(marks);
  e.reference = 0.5;
  EXPECT_TRUE(e.within(3.0)) << e.mean;
}

TEST(SampleSpine, ThinningTimeHistogram) {
  // Atom times have density proportional to e^{-c(m - t)} on [0, m).
  auto mech = Mechanism{{0.0, 1.0, Levy_measure::atoms({{1.0, 1.0}})}};
  auto k = Extinction_kernel{mech};
  auto m = 4.0;
  auto g = Philox{8, 0};
  auto times = std::vector<double>{};
  while (times.size() < 100'000) {
    for (const auto& a : sample_spine(mech, k, m, g).atoms) times.push_back(a.t);
  }
  auto n = static_cast<double>(times.size());
  auto density = [&](double t) { return std::exp(-k.c_direct(m - t)); };
  auto norm = gk(density, 0.0, m);
  constexpr int bins = 16;
  for (int b = 0; b < bins; ++b) {
    auto lo = m * b / bins;
    auto hi = m * (b + 1) / bins;
    auto p = gk(density, lo, hi) / norm;
    auto hits = static_cast<double>(std::count_if(times.begin(), times.end(),
                                                  [&](double t) { return t >= lo && t < hi; }));
    EXPECT_NEAR(hits / n, p, 3.0 * std::sqrt(p * (1 - p) / n) + 1e-12) << "bin " << b;
  }
}

TEST(SampleSpine, PowerLawCountAndDrift) {
  auto mech = Mechanism{{0.0, 0.0, Levy_measure::power_law(1.5)}};
  auto k = Extinction_kernel{mech};
  auto cut = small_atom_cutoff(mech.pi());
  auto scale = mech.pi().density_scale();
  // The mass rule binds for gamma = 1.5.
  EXPECT_NEAR(scale * std::sqrt(cut) / 0.5, 0.01, 1e-14);

  auto m = 1.0;
  auto inner = [&](double c) {
    auto f = [&](double ell) { return std::pow(ell, -1.5) * std::exp(-ell * c); };
    auto e = boost::math::quadrature::exp_sinh<double>{};
    return scale * e.integrate([&](double x) { return f(cut + x); }, 0.0,
                               std::numeric_limits<double>::infinity(), 1e-12);
  };
  auto oracle = gk([&](double s) { return inner(k.c(s)); }, 0.0, m);
  EXPECT_NEAR(expected_spine_count(mech, k, m), oracle, 1e-7 * oracle);

  auto g = Philox{9, 0};
  auto counts = std::vector<double>(10'000);
  auto s = Spine_measure{};
  for (auto& c : counts) {
    s = sample_spine(mech, k, m, g);
    c = static_cast<double>(s.count());
    for (const auto& a : s.atoms) ASSERT_GE(a.ell, cut);
  }
  auto e = summarize(counts);
  e.reference = oracle;
  EXPECT_TRUE(e.within(3.0)) << e.z();

  // Drift density: C int_0^cut ell^{1-g} e^{-ell c} d ell.
  auto ts = boost::math::quadrature::tanh_sinh<double>{};
  for (double t : {0.1, 0.5, 0.9}) {
    auto c = k.c(m - t);
    auto small = scale * ts.integrate([&](double ell) { return std::pow(ell, -0.5) * std::exp(-ell * c); },
                                      0.0, cut, 1e-13);
    EXPECT_NEAR(spine_drift_density(k, s, t), small, 1e-9 * small);
    EXPECT_LE(small, 0.01);
  }
}

TEST(SampleSpine, PowerLawCutoffRespectsRateCap) {
  auto pi = Levy_measure::power_law(1.9);
  auto cut = small_atom_cutoff(pi);
  auto rate = pi.density_scale() * std::pow(cut, -0.9) / 0.9;
  EXPECT_NEAR(rate, 1e4, 1e-6 * 1e4);
}

TEST(SampleT0, Examples) {
  auto g = Philox{10, 0};
  auto none = Mutation_split{{{0.0, 1.0, Levy_measure::atoms({{1.0, 1.0}})}, Levy_measure::zero(), 0.0}};
  auto k = Extinction_kernel{none.total()};
  for (int i = 0; i < 200; ++i) {
    auto c = sample_t0(none, sample_spine(none, k, 1.0, g), g);
    EXPECT_TRUE(c.simultaneous());
    EXPECT_EQ(c.t1, never);
    EXPECT_EQ(c.t2, never);
  }

  auto skeleton = Mutation_split{{{0.0, 1.0, Levy_measure::zero()}, Levy_measure::zero(), 0.7}};
  auto k2 = Extinction_kernel{skeleton.total()};
  auto never_hit = std::vector<double>(100'000);
  for (auto& n : never_hit) n = sample_t0(skeleton, sample_spine(skeleton, k2, 1.5, g), g).simultaneous();
  auto e = summarize(never_hit);
  e.reference = std::exp(-0.7 * 1.5);
  EXPECT_TRUE(e.within(3.0)) << e.mean;
}

TEST(SampleT0, SurvivalMatchesKernel) {
  auto split = a5_split();
  auto k = Extinction_kernel{split.total()};
  auto g = Philox{11, 0};
  auto t0 = std::vector<double>(100'000);
  for (auto& t : t0) {
    auto clock = sample_t0(split, sample_spine(split, k, 1.0, g), g);
    EXPECT_EQ(clock.t0, std::min(clock.t1, clock.t2) < 1.0 ? std::min(clock.t1, clock.t2) : never);
    t = clock.t0;
  }
  for (double r : {0.2, 0.5, 0.8}) {
    auto above = std::vector<double>(t0.size());
    std::transform(t0.begin(), t0.end(), above.begin(), [&](double t) { return t > r ? 1.0 : 0.0; });
    auto e = summarize(above);
    e.reference = t0_survival(k, split, 1.0, r);
    EXPECT_TRUE(e.within(3.0)) << "r " << r << " z " << e.z();
  }
  auto simultaneous = std::vector<double>(t0.size());
  std::transform(t0.begin(), t0.end(), simultaneous.begin(), [](double t) { return t == never; });
  auto s = summarize(simultaneous);
  s.reference = simultaneous_extinction_prob(k, split, 1.0);
  EXPECT_TRUE(s.within(3.0)) << s.z();
}

TEST(SpinePair, PureDrift) {
  auto mech = quad(0.2, 1.0);
  auto k = Extinction_kernel{mech};
  auto g = Philox{12, 0};
  auto p = sample_spine_pair(mech, k, 1.0, g);
  EXPECT_EQ(p.rho.count(), 0u);
  EXPECT_EQ(p.eta.count(), 0u);
  EXPECT_EQ(p.rho.drift, 1.0);
  EXPECT_EQ(p.eta.drift, 1.0);
}

TEST(SpinePair, MarginalSumMatchesSpine) {
  auto split = a5_split();
  auto mech = split.total();
  auto k = Extinction_kernel{mech};
  auto g1 = Philox{13, 0};
  auto g2 = Philox{13, 1};
  auto pair_mass = std::vector<double>(10'000);
  auto spine_mass = std::vector<double>(10'000);
  auto pair_count = std::vector<double>(10'000);
  auto spine_count = std::vector<double>(10'000);
  auto fractions = std::vector<double>{};
  for (std::size_t i = 0; i < pair_mass.size(); ++i) {
    auto p = sample_spine_pair(mech, k, 1.0, g1);
    ASSERT_EQ(p.rho.count(), p.eta.count());
    for (std::size_t j = 0; j < p.rho.count(); ++j) {
      ASSERT_TRUE(p.rho.atoms[j].v.has_value());
      EXPECT_NEAR(p.rho.atoms[j].ell + p.eta.atoms[j].ell, 1.0, 1e-15);
      fractions.push_back(*p.rho.atoms[j].v);
    }
    pair_mass[i] = p.rho.atom_mass() + p.eta.atom_mass();
    pair_count[i] = static_cast<double>(p.rho.count());
    auto s = sample_spine(split, k, 1.0, g2);
    spine_mass[i] = s.atom_mass();
    spine_count[i] = static_cast<double>(s.count());
  }
  EXPECT_TRUE(ks_two_sample(pair_mass, spine_mass, 0.01).pass);
  auto a = summarize(pair_count);
  auto b = summarize(spine_count);
  EXPECT_LE(std::abs(a.mean - b.mean), 3.0 * std::hypot(a.std_error, b.std_error));

  auto uniforms = std::vector<double>(fractions.size());
  auto gu = Philox{13, 2};
  for (auto& u : uniforms) u = gu.uniform();
  ASSERT_GE(fractions.size(), 100u);
  EXPECT_TRUE(ks_two_sample(fractions, uniforms, 0.01).pass);
}

TEST(ResampleGivenT0, Examples) {
  auto g = Philox{14, 0};
  auto skeleton = Mutation_split{{{0.0, 1.0, Levy_measure::atoms({{1.0, 1.0}})}, Levy_measure::zero(), 0.3}};
  auto k = Extinction_kernel{skeleton.total()};
  EXPECT_THROW(resample_spine_given_t0(skeleton, k, 1.0, 0.5, T0_channel::t1, g), Domain_error);
  EXPECT_THROW(resample_spine_given_t0(skeleton, k, 1.0, 1.0, T0_channel::t2, g), Domain_error);

  auto counts = std::vector<double>(10'000);
  for (auto& c : counts) {
    auto r = resample_spine_given_t0(skeleton, k, 2.0, 0.5, T0_channel::t2, g);
    EXPECT_EQ(r.clock.t0, 0.5);
    EXPECT_EQ(r.clock.t2, 0.5);
    for (const auto& a : r.spine.atoms) EXPECT_EQ(a.z, 0);
    c = static_cast<double>(r.spine.count());
  }
  auto e = summarize(counts);
  e.reference = expected_spine_count(skeleton.total(), k, 2.0);
  EXPECT_TRUE(e.within(3.0)) << e.z();
}

TEST(ResampleGivenT0, MutantAtomChannel) {
  auto split = a5_split();
  auto k = Extinction_kernel{split.total()};
  auto g = Philox{15, 0};
  for (int i = 0; i < 2000; ++i) {
    auto r = resample_spine_given_t0(split, k, 1.0, 0.4, T0_channel::t1, g);
    EXPECT_EQ(r.clock.t0, 0.4);
    EXPECT_EQ(r.clock.t1, 0.4);
    EXPECT_GT(r.clock.t2, 0.4);
    auto at_r = 0;
    for (const auto& a : r.spine.atoms) {
      if (a.t < 0.4) EXPECT_EQ(a.z, 0);
      if (a.t == 0.4) {
        ++at_r;
        EXPECT_EQ(a.ell, 1.0);
        EXPECT_EQ(a.z, 1);
      }
    }
    EXPECT_EQ(at_r, 1);
    auto t2 = resample_spine_given_t0(split, k, 1.0, 0.4, T0_channel::t2, g);
    for (const auto& a : t2.spine.atoms) {
      if (a.t < 0.4) EXPECT_EQ(a.z, 0);
    }
    EXPECT_GE(t2.clock.t1, 0.4);
  }
}

TEST(ResampleGivenT0, ExtraAtomSizeLaw) {
  // Weights nu_i ell_i e^{-ell_i c(m - r)}.
  auto split = Mutation_split{{{0.0, 1.0, Levy_measure::atoms({{0.5, 1.0}, {2.0, 1.0}})},
                               Levy_measure::atoms({{0.5, 1.0}, {2.0, 0.5}}),
                               0.0}};
  auto k = Extinction_kernel{split.total()};
  auto c = k.c(0.6);
  auto w1 = 0.5 * std::exp(-0.5 * c);
  auto w2 = 1.0 * std::exp(-2.0 * c);
  auto g = Philox{16, 0};
  auto big = std::vector<double>(20'000);
  for (auto& b : big) {
    auto r = resample_spine_given_t0(split, k, 1.0, 0.4, T0_channel::t1, g);
    auto it = std::find_if(r.spine.atoms.begin(), r.spine.atoms.end(),
                           [](const Spine_atom& a) { return a.t == 0.4 && a.z == 1; });
    ASSERT_NE(it, r.spine.atoms.end());
    b = it->ell == 2.0;
  }
  auto e = summarize(big);
  e.reference = w2 / (w1 + w2);
  EXPECT_TRUE(e.within(3.0)) << e.mean;
}

}  // namespace
}  // namespace csbp
