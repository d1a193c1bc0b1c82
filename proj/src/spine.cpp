#include "csbp/spine.h"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "csbp/draws.h"
#include "csbp/errors.h"
#include "csbp/numeric.h"

namespace csbp {

namespace {

void require_horizon(double m) {
  if (!(m > 0.0) || !std::isfinite(m)) throw Domain_error("spine: horizon m must be finite and > 0");
}

void require_kernel(const Extinction_kernel& k, const Mechanism& mech) {
  const auto& a = k.mechanism();
  if (!(a.alpha0() == mech.alpha0() && a.beta() == mech.beta() && a.pi() == mech.pi())) {
    throw Domain_error("spine: kernel and mechanism differ");
  }
}

// Atoms of one measure on [ta, tb): Poisson(p ell (tb - ta)) proposals at
// uniform times, each kept with probability e^{-ell c(m - t)}.
void add_atoms(std::span<const Atom> atoms, int z, const Extinction_kernel& k, double m, double ta,
               double tb, Philox& g, std::vector<Spine_atom>& out) {
  if (!(tb > ta)) return;
  for (auto a : atoms) {
    auto n = draw::poisson(a.mass * a.location * (tb - ta), g);
    for (std::int64_t i = 0; i < n; ++i) {
      auto t = ta + g.uniform() * (tb - ta);
      if (draw::bernoulli(std::exp(-a.location * k.c(m - t)), g)) out.push_back({t, a.location, z, {}});
    }
  }
}

// Power-law atoms above `cut`: Pareto proposals at rate C cut^{1-g} / (g-1),
// thinned by e^{-ell c(m - t)}.
void add_power_law(const Levy_measure& pi, double cut, const Extinction_kernel& k, double m,
                   double ta, double tb, Philox& g, std::vector<Spine_atom>& out) {
  if (!(tb > ta)) return;
  auto gam = pi.gamma();
  auto rate = pi.density_scale() * std::pow(cut, 1.0 - gam) / (gam - 1.0);
  auto n = draw::poisson(rate * (tb - ta), g);
  for (std::int64_t i = 0; i < n; ++i) {
    auto t = ta + g.uniform() * (tb - ta);
    auto ell = cut * std::pow(g.uniform(), -1.0 / (gam - 1.0));
    if (draw::bernoulli(std::exp(-ell * k.c(m - t)), g)) out.push_back({t, ell, 0, {}});
  }
}

void add_measure(const Levy_measure& pi, int z, double cut, const Extinction_kernel& k, double m,
                 double ta, double tb, Philox& g, std::vector<Spine_atom>& out) {
  switch (pi.kind()) {
    case Levy_measure::Kind::zero:
      break;
    case Levy_measure::Kind::atoms:
      add_atoms(pi.atom_list(), z, k, m, ta, tb, g, out);
      break;
    case Levy_measure::Kind::power_law:
      add_power_law(pi, cut, k, m, ta, tb, g, out);
      break;
  }
}

void sort_by_time(std::vector<Spine_atom>& atoms) {
  std::sort(atoms.begin(), atoms.end(),
            [](const Spine_atom& a, const Spine_atom& b) { return a.t < b.t; });
}

auto first_mutant(const Spine_measure& s) -> double {
  for (const auto& a : s.atoms) {
    if (a.z == 1) return a.t;
  }
  return never;
}

}  // namespace

auto Spine_measure::atom_mass() const -> double {
  auto s = 0.0;
  for (const auto& a : atoms) s += a.ell;
  return s;
}

auto sample_m(const Extinction_kernel& k, double m_lo, double m_hi, Philox& g) -> double {
  if (!(m_lo > 0.0) || !std::isfinite(m_lo)) throw Domain_error("sample_m: need finite m_lo > 0");
  if (!(m_hi >= m_lo)) throw Domain_error("sample_m: empty window");
  if (m_hi == m_lo) return m_lo;
  auto c_lo = k.c(m_lo);
  auto c_hi = std::isinf(m_hi) ? 0.0 : k.c(m_hi);
  auto target = c_lo - g.uniform() * (c_lo - c_hi);
  return std::clamp(k.c_inverse(target), m_lo, m_hi);
}

auto small_atom_cutoff(const Levy_measure& pi, const Spine_options& opt) -> double {
  if (pi.kind() != Levy_measure::Kind::power_law) return 0.0;
  auto gam = pi.gamma();
  auto scale = pi.density_scale();
  auto by_mass = std::pow(opt.small_atom_mass * (2.0 - gam) / scale, 1.0 / (2.0 - gam));
  auto by_rate = std::pow(opt.max_proposal_rate * (gam - 1.0) / scale, 1.0 / (1.0 - gam));
  return std::max(by_mass, by_rate);
}

auto sample_spine(const Mutation_split& split, const Extinction_kernel& k, double m, Philox& g,
                  const Spine_options& opt, double until) -> Spine_measure {
  require_horizon(m);
  require_kernel(k, split.total());
  if (!(until > 0.0)) throw Domain_error("sample_spine: until must be > 0");
  auto s = Spine_measure{m, {}, 2.0 * split.total().beta(), small_atom_cutoff(split.total().pi(), opt), 1.0};
  auto stop = std::min(m, until);
  if (stop < m) s.observed_until = stop;
  add_measure(split.pi_eve(), 0, s.small_atom_cutoff, k, m, 0.0, stop, g, s.atoms);
  add_measure(split.nu(), 1, 0.0, k, m, 0.0, stop, g, s.atoms);
  sort_by_time(s.atoms);
  return s;
}

auto sample_spine(const Mechanism& mech, const Extinction_kernel& k, double m, Philox& g,
                  const Spine_options& opt) -> Spine_measure {
  return sample_spine(Mutation_split{{mech.params(), Levy_measure::zero(), 0.0}}, k, m, g, opt);
}

auto expected_spine_count(const Mechanism& mech, const Extinction_kernel& k, double m,
                          const Spine_options& opt) -> double {
  require_horizon(m);
  require_kernel(k, mech);
  const auto& pi = mech.pi();
  switch (pi.kind()) {
    case Levy_measure::Kind::zero:
      return 0.0;
    case Levy_measure::Kind::atoms: {
      auto total = 0.0;
      for (auto a : pi.atom_list()) {
        auto f = [&](double s) { return std::exp(-a.location * k.c(s)); };
        total += a.mass * a.location * numeric::integrate(f, 0.0, m, 1e-10, 18, "spine count");
      }
      return total;
    }
    case Levy_measure::Kind::power_law: {
      auto gam = pi.gamma();
      auto cut = small_atom_cutoff(pi, opt);
      // int_cut^inf ell^{-g} e^{-ell c} d ell = c^{g-1} Gamma(1-g, cut c), with
      // Gamma(a, x) = (Gamma(a+1, x) - x^a e^{-x}) / a.
      auto f = [&](double s) {
        auto c = k.c(s);
        auto x = cut * c;
        auto a = 1.0 - gam;
        auto upper = (boost::math::tgamma(a + 1.0, x) - std::pow(x, a) * std::exp(-x)) / a;
        return std::pow(c, gam - 1.0) * upper;
      };
      return pi.density_scale() * numeric::integrate(f, 0.0, m, 1e-10, 18, "spine count");
    }
  }
  return 0.0;
}

auto spine_drift_density(const Extinction_kernel& k, const Spine_measure& s, double t) -> double {
  if (s.small_atom_cutoff == 0.0 || !(t < s.m)) return s.drift;
  const auto& pi = k.mechanism().pi();
  auto gam = pi.gamma();
  auto c = k.c(s.m - t);
  // C int_0^cut ell^{1-g} e^{-ell c} d ell.
  auto small = pi.density_scale() * std::pow(c, gam - 2.0) *
               boost::math::tgamma_lower(2.0 - gam, s.small_atom_cutoff * c);
  return s.drift + s.small_atom_share * small;
}

auto sample_t0(const Mutation_split& split, const Spine_measure& spine, Philox& g)
    -> Mutation_clock {
  auto clock = Mutation_clock{};
  clock.t1 = first_mutant(spine);
  if (split.alpha_imm() > 0.0) clock.t2 = draw::exponential(1.0 / split.alpha_imm(), g);
  auto t0 = std::min(clock.t1, clock.t2);
  clock.t0 = t0 < std::min(spine.m, spine.observed_until) ? t0 : never;
  return clock;
}

auto sample_spine_pair(const Mechanism& mech, const Extinction_kernel& k, double m, Philox& g,
                       const Spine_options& opt) -> Spine_pair {
  auto whole = sample_spine(mech, k, m, g, opt);
  auto half = Spine_measure{m, {}, mech.beta(), whole.small_atom_cutoff, 0.5};
  auto out = Spine_pair{half, half};
  for (const auto& a : whole.atoms) {
    auto v = g.uniform();
    out.rho.atoms.push_back({a.t, v * a.ell, a.z, v});
    out.eta.atoms.push_back({a.t, (1.0 - v) * a.ell, a.z, v});
  }
  return out;
}

auto resample_spine_given_t0(const Mutation_split& split, const Extinction_kernel& k, double m,
                             double r, T0_channel channel, Philox& g, const Spine_options& opt)
    -> Marked_spine {
  require_horizon(m);
  require_kernel(k, split.total());
  if (!(r > 0.0 && r < m)) throw Domain_error("resample_spine_given_t0: need 0 < r < m");
  if (channel == T0_channel::t1 && split.nu().is_zero()) {
    throw Domain_error("resample_spine_given_t0: channel T1 needs a non-zero nu");
  }
  if (channel == T0_channel::t2 && split.alpha_imm() == 0.0) {
    throw Domain_error("resample_spine_given_t0: channel T2 needs alpha_imm > 0");
  }
  auto out = Marked_spine{};
  auto& s = out.spine;
  s = Spine_measure{m, {}, 2.0 * split.total().beta(), small_atom_cutoff(split.total().pi(), opt), 1.0};
  add_measure(split.pi_eve(), 0, s.small_atom_cutoff, k, m, 0.0, r, g, s.atoms);
  add_measure(split.pi_eve(), 0, s.small_atom_cutoff, k, m, r, m, g, s.atoms);
  add_measure(split.nu(), 1, 0.0, k, m, r, m, g, s.atoms);
  if (channel == T0_channel::t1) {
    auto c = k.c(m - r);
    auto nu = split.nu().atom_list();
    auto weights = std::vector<double>{};
    auto total = 0.0;
    for (auto a : nu) {
      total += a.mass * a.location * std::exp(-a.location * c);
      weights.push_back(total);
    }
    auto pick = g.uniform() * total;
    auto i = static_cast<std::size_t>(std::upper_bound(weights.begin(), weights.end(), pick) -
                                      weights.begin());
    s.atoms.push_back({r, nu[std::min(i, nu.size() - 1)].location, 1, {}});
  }
  sort_by_time(s.atoms);
  auto later = first_mutant(s);
  auto& clock = out.clock;
  clock.t0 = r;
  if (channel == T0_channel::t1) {
    clock.t1 = r;
    if (split.alpha_imm() > 0.0) clock.t2 = r + draw::exponential(1.0 / split.alpha_imm(), g);
  } else {
    clock.t2 = r;
    clock.t1 = later;
  }
  return out;
}

}  // namespace csbp
