#pragma once

#include <optional>
#include <vector>

#include "csbp/forward.h"
#include "csbp/kernel.h"
#include "csbp/mechanism.h"
#include "csbp/rng.h"

namespace csbp {

struct Spine_atom {
  double t = 0.0;    // in [0, m)
  double ell = 0.0;  // > 0
  int z = 0;         // 1 for a mutant (nu) atom
  std::optional<double> v;  // split fraction, spine-pair draws only
};

// Atoms ell_i delta_{t_i} plus a drift along [0, m). With a power-law pi the
// atoms below `small_atom_cutoff` are infinitely many; they are not drawn
// and their expected mass is carried by an extra, time-dependent drift
// density (see spine_drift_density), scaled by `small_atom_share`.
struct Spine_measure {
  double m = 0.0;
  std::vector<Spine_atom> atoms;  // increasing t
  double drift = 0.0;
  double small_atom_cutoff = 0.0;
  double small_atom_share = 1.0;
  // Atoms are only drawn on [0, observed_until); a clock read from such a
  // spine is exact before that time and reports later mutations as never.
  double observed_until = never;

  auto count() const -> std::size_t { return atoms.size(); }
  auto atom_mass() const -> double;
};

struct Mutation_clock {
  double t1 = never;  // first mutant atom on the spine
  double t2 = never;  // skeleton mutation, Exp(alpha_imm)
  double t0 = never;  // min(t1, t2) when below m

  auto simultaneous() const -> bool { return t0 == never; }
};

struct Spine_options {
  // Power-law pi: the cutoff is the smallest ell whose sub-cutoff mean mass
  // rate C ell^{2-g}/(2-g) is at most small_atom_mass, but never so small
  // that proposals above it exceed max_proposal_rate per unit time.
  double small_atom_mass = 0.01;
  double max_proposal_rate = 1e4;
};

// m with density |c'(m)| / (c(m_lo) - c(m_hi)) on [m_lo, m_hi], by inverse
// transform. m_hi may be +inf.
auto sample_m(const Extinction_kernel& k, double m_lo, double m_hi, Philox& g) -> double;

// Poisson measure on (t, ell, z) with intensity
//   1_[0,m)(t) e^{-ell c(m-t)} ell [pi_eve(d ell) delta_0(dz) + nu(d ell) delta_1(dz)] dt,
// drift 2 beta. Exact thinning against the bound ell pi(d ell) dt. Atoms
// after `until` are not drawn.
auto sample_spine(const Mutation_split& split, const Extinction_kernel& k, double m, Philox& g,
                  const Spine_options& opt = {}, double until = never) -> Spine_measure;
auto sample_spine(const Mechanism& mech, const Extinction_kernel& k, double m, Philox& g,
                  const Spine_options& opt = {}) -> Spine_measure;

// Mean number of drawn atoms, int_0^m int ell e^{-ell c(s)} pi(d ell) ds
// (power law: above the cutoff only).
auto expected_spine_count(const Mechanism& mech, const Extinction_kernel& k, double m,
                          const Spine_options& opt = {}) -> double;

// Extra drift density at time t carried by the sub-cutoff atoms of a
// power-law spine, plus the constant drift.
auto spine_drift_density(const Extinction_kernel& k, const Spine_measure& s, double t) -> double;

// Cutoff actually used for a power-law pi (0 otherwise).
auto small_atom_cutoff(const Levy_measure& pi, const Spine_options& opt = {}) -> double;

// T1 from the marks, T2 an independent Exp(alpha_imm) draw.
auto sample_t0(const Mutation_split& split, const Spine_measure& spine, Philox& g)
    -> Mutation_clock;

// Spine pair: atoms with the same (r, t) law as sample_spine and independent
// fractions v ~ U[0,1]; rho carries v r, eta (1 - v) r, each with drift beta.
struct Spine_pair {
  Spine_measure rho;
  Spine_measure eta;
};
auto sample_spine_pair(const Mechanism& mech, const Extinction_kernel& k, double m, Philox& g,
                       const Spine_options& opt = {}) -> Spine_pair;

// Conditional law given T0 = r through one channel. T2: pi_eve atoms only on
// [0, r), full intensity on (r, m). T1: the same plus a mutant atom at r with
// mass drawn from e^{-ell c(m-r)} ell nu(d ell) (normalised).
enum class T0_channel { t1, t2 };
struct Marked_spine {
  Spine_measure spine;
  Mutation_clock clock;
};
auto resample_spine_given_t0(const Mutation_split& split, const Extinction_kernel& k, double m,
                             double r, T0_channel channel, Philox& g,
                             const Spine_options& opt = {}) -> Marked_spine;

}  // namespace csbp
