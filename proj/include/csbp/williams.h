#pragma once

#include <cstdint>
#include <vector>

#include "csbp/forward.h"
#include "csbp/kernel.h"
#include "csbp/laplace.h"
#include "csbp/rng.h"
#include "csbp/spine.h"
#include "csbp/stats.h"

namespace csbp {

struct Williams_options {
  double eps = 1e-3;    // grafts with lifetime below eps are dropped
  double delta = 1e-2;  // global grid
  // Configuration error when the expected number of graft candidates of one
  // sample exceeds this.
  double max_expected_candidates = 1e6;
  Forward_options forward;
  Spine_options spine;
};

struct Assemble_request {
  // Spine atoms and grafts at or after this time are not generated and all
  // paths stop here. Exact for any functional of the population on
  // [0, observe_until].
  double observe_until = never;
  bool keep_grafts = true;
};

struct Grafted_excursion {
  double t_graft = 0.0;
  bool eve_typed = false;  // t_graft < T0
  Path total;
  Path eve;  // empty unless eve_typed
};

// One draw of the population conditioned to die at m. The aggregate holds
// every grid node in [0, min(m, observe_until)] (including zeros); its
// extinction_time is the node after the last positive value.
struct Decomposition_sample {
  double m = 0.0;
  Spine_measure spine;
  Mutation_clock clock;
  std::vector<Grafted_excursion> grafts;
  Pair_path aggregate;
  double eps = 0.0;
  double observe_until = never;
  long candidates = 0;
  long accepted = 0;
  double expected_candidates = 0.0;
};

// Spine, clock and Poisson-grafted excursions for a population conditioned on
// its extinction time. Each unit of spine mass at time t sends excursions at
// rate c(eps) (entrance-law candidates); a candidate is kept iff it dies by m,
// which leaves a Poisson field with intensity (c(eps) - c(m - t))^+ of
// excursions conditioned on eps < tau <= m - t. Grafts before T0 are
// two-type and start fully Eve; later ones carry no Eve mass.
//
// The kernel must outlive the decomposer.
class Decomposer {
 public:
  Decomposer(const Mutation_split& split, const Extinction_kernel& k, Williams_options opt = {});

  // Spine and clock only; uses the same streams as assemble, so the clock of
  // a replica is identical in both (for the same `until`).
  auto sample_clock(double m, const Replica_streams& rs, double until = never) const
      -> Marked_spine;
  auto assemble(double m, const Replica_streams& rs, const Assemble_request& req = {}) const
      -> Decomposition_sample;

  // Mean number of kept grafts born before `until` given the spine:
  // sum ell_i (c(eps) - c(m - t_i))^+ + int D(t) (c(eps) - c(m - t))^+ dt.
  auto expected_graft_count(const Spine_measure& spine, double until = never) const -> double;

  auto split() const -> const Mutation_split& { return split_; }
  auto kernel() const -> const Extinction_kernel& { return *k_; }
  auto options() const -> const Williams_options& { return opt_; }
  auto excursions() const -> const Excursion_sampler& { return excursions_; }

 private:
  Mutation_split split_;
  const Extinction_kernel* k_;
  Williams_options opt_;
  Excursion_sampler excursions_;
};

struct Laplace_mc {
  std::size_t n = 1000;
  double m_max = 8.0;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  // Also sample m in [m_max, inf) instead of only bounding that part by c(m_max).
  bool sample_tail = true;
};

// Estimate of int |c'(m)| Q_m[1 - e^{-<Y'0, mu_eve> - <Y', mu_total>}] dm.
struct Laplace_estimate {
  Mc_estimate value;    // window + tail strata
  Mc_estimate window;   // m in [a_1, m_max], weighted by c(a_1) - c(m_max)
  Mc_estimate tail;     // m in [m_max, inf), weighted by c(m_max)
  double window_weight = 0.0;
  double tail_bound = 0.0;  // c(m_max): the whole tail contribution is below this
  // Bound on the effect of dropping sub-eps grafts and ramping new grafts in.
  // Time-discretisation of the forward steps is not included.
  double bias_budget = 0.0;
};

// m is drawn by inverse transform in each stratum (replicas allotted in
// proportion to the stratum weights). Support times must lie on the grid.
auto laplace_estimate(const Decomposer& d, const Test_functional& f, const Laplace_mc& mc)
    -> Laplace_estimate;

// The bias budget alone.
auto truncation_bias_budget(const Decomposer& d, const Test_functional& f) -> double;

}  // namespace csbp
