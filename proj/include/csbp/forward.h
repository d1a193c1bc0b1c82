#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "csbp/kernel.h"
#include "csbp/mechanism.h"
#include "csbp/rng.h"

namespace csbp {

inline constexpr double never = std::numeric_limits<double>::infinity();

// Values of a population on the uniform grid t0, t0 + delta, ... . Storage
// stops at the first zero; the process is absorbed there and `at` reads 0
// beyond the stored range.
struct Path {
  double t0 = 0.0;
  double delta = 0.0;
  std::vector<double> values;
  double extinction_time = never;  // first grid time with value 0

  auto size() const -> std::size_t { return values.size(); }
  auto time(std::size_t i) const -> double { return t0 + static_cast<double>(i) * delta; }
  auto at(std::size_t i) const -> double { return i < values.size() ? values[i] : 0.0; }
};

struct Pair_path {
  Path eve;
  Path total;
};

struct Forward_options {
  // Power-law jumps below a cutoff are replaced by extra diffusion; the
  // cutoff is chosen so that their variance rate int_0^cut l^2 pi(dl) equals
  // this value per unit mass.
  double small_jump_variance = 0.1;
};

// Compound jump source: jumps arrive at rate (mass x rate()) and have i.i.d.
// sizes drawn by size().
class Jump_source {
 public:
  Jump_source() = default;
  static auto from_atoms(const Levy_measure& pi) -> Jump_source;
  // Jumps above `cut` of a power-law measure (Pareto sizes).
  static auto pareto_tail(const Levy_measure& pi, double cut) -> Jump_source;

  auto rate() const -> double { return rate_; }
  auto size(Philox& g) const -> double;

 private:
  double rate_ = 0.0;
  std::vector<double> cumulative_;  // atoms: cumulative masses
  std::vector<double> sizes_;
  double cut_ = 0.0;  // pareto: lower end
  double gamma_ = 0.0;
};

// One transition of a CSBP over a step h.
//
// Quadratic mechanisms use the exact Feller transition: with
// u(l,h) = p l / (1 + q l), Y_h is a Poisson(y p / q) number of Exp(q)
// variables. With jumps the generator is split into the compensated Feller
// part (drift alpha0 + int l pi, diffusion beta) and raw jumps at rate y pi,
// each flow solved exactly and composed symmetrically (Strang): jumps for
// h/2, Feller for h, jumps for h/2. Power-law jumps below a cutoff become
// extra diffusion.
class Forward_stepper {
 public:
  explicit Forward_stepper(const Mechanism& mech, Forward_options opt = {});

  auto step(double y, double h, Philox& g) const -> double;
  // Marginals at the grid are exact (no splitting, no truncation).
  auto exact() const -> bool { return jumps_.rate() == 0.0 && ell_cut_ == 0.0; }
  auto ell_cut() const -> double { return ell_cut_; }
  auto feller_alpha() const -> double { return alpha_; }
  auto feller_beta() const -> double { return beta_; }
  auto jumps() const -> const Jump_source& { return jumps_; }

 private:
  double alpha_ = 0.0;
  double beta_ = 0.0;
  double ell_cut_ = 0.0;
  Jump_source jumps_;
};

// Joint step of (Eve mass Y0, mutant mass M). Eve is a CSBP(psi_Eve);
// mutants branch with psi and receive immigration at rate alpha_Imm Y0 plus
// jumps Y0 nu(dl). Composition: immigration drift h/2, jumps h/2, both
// Feller flows h, jumps h/2, immigration drift h/2.
class Pair_stepper {
 public:
  explicit Pair_stepper(const Mutation_split& split, Forward_options opt = {});

  void step(double& eve, double& mutant, double h, Philox& g) const;
  auto exact() const -> bool { return exact_; }
  auto ell_cut() const -> double { return mutant_.ell_cut(); }

 private:
  void jump_flow(double& eve, double& mutant, double h, Philox& g) const;

  Forward_stepper eve_;
  Forward_stepper mutant_;
  Jump_source immigration_;
  double alpha_imm_ = 0.0;
  bool exact_ = false;
};

// Exact Feller transition over dt (Poisson-Gamma mixture).
auto feller_step(double y, double alpha, double beta, double dt, Philox& g) -> double;
auto step_quadratic_exact(double y, double dt, const Mechanism& mech, Philox& g) -> double;

auto simulate_path(const Forward_stepper& stepper, double y0, double horizon, double delta,
                   Philox& g) -> Path;
auto simulate_path(const Mechanism& mech, double y0, double horizon, double delta, Philox& g)
    -> Path;
auto simulate_pair(const Pair_stepper& stepper, double x, double horizon, double delta, Philox& g)
    -> Pair_path;
auto simulate_pair(const Mutation_split& split, double x, double horizon, double delta, Philox& g)
    -> Pair_path;

// Grid extinction times of a pair started from (x, 0), without storing the
// paths; +inf when still alive at max_time.
struct Pair_extinction {
  double eve = never;
  double total = never;
};
auto pair_extinction_times(const Pair_stepper& stepper, double x, double delta, double max_time,
                           Philox& g) -> Pair_extinction;

// Y_eps under N( . | tau > eps), whose Laplace transform is
// 1 - u(l, eps) / c(eps). Exact Exp(q) for quadratic mechanisms; otherwise
// inverse transform on a distribution function tabulated by Gaver-Stehfest
// inversion, or a moment-matched Gamma when the table fails its checks.
class Entrance_sampler {
 public:
  Entrance_sampler(const Extinction_kernel& k, double eps);

  auto sample(Philox& g) const -> double;
  auto eps() const -> double { return eps_; }
  // N[Y_eps] / c(eps).
  auto mean() const -> double { return mean_; }
  auto approximate() const -> bool { return method_ == Method::gamma_fallback; }
  auto exact() const -> bool { return method_ == Method::exponential; }
  // Distribution function of the tabulated law (exact for quadratic).
  auto cdf(double x) const -> double;

 private:
  enum class Method { exponential, table, gamma_fallback };
  void build_table(const Extinction_kernel& k);

  double eps_;
  double mean_;
  double second_moment_ = 0.0;
  Method method_ = Method::exponential;
  std::vector<double> xs_, fs_;
};

auto entrance_sample(const Extinction_kernel& k, double eps, Philox& g) -> double;

// An excursion under N born at global time `birth`, kept only when it dies by
// `cap`. It enters at birth + eps with an entrance-law value, is simulated
// forward on the global grid (nodes k * delta) up to `observe_until`, and
// from there the event {tau <= cap} is decided by a Bernoulli with the exact
// probability e^{-y c(cap - observe_until)}. Grid nodes in [birth,
// birth + eps) carry a linear ramp from 0.
struct Excursion_spec {
  double birth = 0.0;
  double cap = never;
  double observe_until = never;  // clamped to cap
  double delta = 1e-3;
  bool pair = false;  // also carry the Eve part, starting fully Eve
};

struct Excursion {
  Path total;
  Path eve;  // empty unless spec.pair
  double entrance_value = 0.0;
  long steps = 0;
};

class Excursion_sampler {
 public:
  Excursion_sampler(const Extinction_kernel& k, const Mutation_split& split, double eps,
                    Forward_options opt = {});

  // Returns nothing when the candidate survives past the cap.
  auto sample(const Excursion_spec& spec, Philox& g) const -> std::optional<Excursion>;
  // (c(eps) - c(h)) / c(eps) for lifetime cap h.
  auto acceptance(double h) const -> double;

  auto entrance() const -> const Entrance_sampler& { return entrance_; }
  auto kernel() const -> const Extinction_kernel& { return *k_; }
  auto eps() const -> double { return entrance_.eps(); }
  auto c_eps() const -> double { return c_eps_; }
  auto exact_forward() const -> bool { return single_.exact() && pair_.exact(); }

 private:
  const Extinction_kernel* k_;
  Entrance_sampler entrance_;
  Forward_stepper single_;
  Pair_stepper pair_;
  double c_eps_;
};

// One candidate of N( . | eps < tau <= h), time-shifted to start at 0;
// rejected candidates come back empty (the caller loops).
auto sample_excursion(const Excursion_sampler& s, double h, double delta, Philox& g)
    -> std::optional<Path>;

}  // namespace csbp
