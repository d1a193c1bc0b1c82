#pragma once

#include <span>
#include <string>
#include <vector>

namespace csbp {

struct Atom {
  double location;  // jump size ell > 0
  double mass;      // weight p > 0

  friend auto operator==(const Atom&, const Atom&) -> bool = default;
};

// Levy measure pi of a branching mechanism. Three closed-form families:
//   zero        no jumps
//   atoms       finite sum of point masses p_i delta_{ell_i}
//   power_law   density gamma (gamma-1) / Gamma(2-gamma) ell^{-1-gamma},
//               normalised so that its contribution to psi is lambda^gamma
class Levy_measure {
 public:
  enum class Kind { zero, atoms, power_law };

  Levy_measure() = default;
  static auto zero() -> Levy_measure { return {}; }
  static auto atoms(std::vector<Atom> atoms) -> Levy_measure;
  static auto power_law(double gamma) -> Levy_measure;

  auto kind() const -> Kind { return kind_; }
  auto is_zero() const -> bool { return kind_ == Kind::zero; }
  auto atom_list() const -> std::span<const Atom> { return atoms_; }
  auto gamma() const -> double { return gamma_; }
  // gamma (gamma - 1) / Gamma(2 - gamma); zero unless power_law.
  auto density_scale() const -> double { return scale_; }

  // Structural problems (non-positive atoms, index outside (1,2)).
  auto issues() const -> std::vector<std::string>;

  // int (e^{-lambda ell} - 1 + lambda ell) pi(d ell)
  auto compensated_laplace(double lambda) const -> double;
  // int ell (1 - e^{-lambda ell}) pi(d ell): derivative of the above
  auto compensated_laplace_prime(double lambda) const -> double;
  // int ell^2 e^{-lambda ell} pi(d ell); infinite at 0 for power_law
  auto compensated_laplace_second(double lambda) const -> double;
  // int (1 - e^{-lambda ell}) pi(d ell); infinite for power_law
  auto laplace_increment(double lambda) const -> double;
  // int ell e^{-x ell} pi(d ell); infinite for power_law
  auto tilted_first_moment(double x) const -> double;

  auto total_mass() const -> double;     // pi((0, inf))
  auto first_moment() const -> double;   // int ell pi
  auto second_moment() const -> double;  // int ell^2 pi

  friend auto operator==(const Levy_measure&, const Levy_measure&) -> bool = default;

 private:
  Kind kind_ = Kind::zero;
  std::vector<Atom> atoms_;
  double gamma_ = 0.0;
  double scale_ = 0.0;
};

struct Validation_report {
  std::vector<std::string> failures;
  auto ok() const -> bool { return failures.empty(); }
  auto summary() const -> std::string;
};

struct Mechanism_params {
  double alpha0 = 0.0;
  double beta = 0.0;
  Levy_measure pi;
};

auto validate(const Mechanism_params& params) -> Validation_report;

// psi(lambda) = alpha0 lambda + beta lambda^2 + int (e^{-lambda ell} - 1 + lambda ell) pi(d ell).
// Only sub-critical or critical mechanisms of infinite variation satisfying
// Grey's condition can be constructed.
class Mechanism {
 public:
  // Throws Validation_error listing every failed invariant.
  explicit Mechanism(Mechanism_params params);

  auto alpha0() const -> double { return p_.alpha0; }
  auto beta() const -> double { return p_.beta; }
  auto pi() const -> const Levy_measure& { return p_.pi; }
  auto params() const -> const Mechanism_params& { return p_; }

  auto psi(double lambda) const -> double;
  auto psi_prime(double lambda) const -> double;
  auto psi_second(double lambda) const -> double;

  // psi = alpha0 lambda + beta lambda^2 with beta > 0
  auto is_quadratic() const -> bool { return p_.pi.is_zero(); }
  // psi = lambda^gamma
  auto is_stable() const -> bool {
    return p_.pi.kind() == Levy_measure::Kind::power_law && p_.alpha0 == 0.0 && p_.beta == 0.0;
  }

 private:
  Mechanism_params p_;
};

struct Split_params {
  Mechanism_params total;
  Levy_measure nu;
  double alpha_imm = 0.0;
};

auto validate(const Split_params& params) -> Validation_report;

// Neutral-mutation split pi = pi_eve + nu with skeleton mutation rate
// alpha_imm. The Eve population has mechanism psi_eve = psi + phi where
//   phi(lambda) = alpha_imm lambda + int nu(d ell) (1 - e^{-lambda ell}).
// Supported splits: nu a sub-measure of an atomic pi, or nu = 0.
class Mutation_split {
 public:
  explicit Mutation_split(Split_params params);

  auto total() const -> const Mechanism& { return total_; }
  auto eve() const -> const Mechanism& { return eve_; }
  auto pi_eve() const -> const Levy_measure& { return eve_.pi(); }
  auto nu() const -> const Levy_measure& { return nu_; }
  auto alpha_imm() const -> double { return alpha_imm_; }
  auto params() const -> Split_params { return {total_.params(), nu_, alpha_imm_}; }

  auto phi(double lambda) const -> double;
  auto phi_prime(double lambda) const -> double;
  auto psi_eve(double lambda) const -> double { return eve_.psi(lambda); }

  // phi'(infinity)
  auto phi_prime_floor() const -> double { return alpha_imm_; }
  // phi'(0) = alpha_imm + int ell nu
  auto phi_prime_ceiling() const -> double { return alpha_imm_ + nu_.first_moment(); }
  auto has_mutation() const -> bool { return alpha_imm_ > 0.0 || !nu_.is_zero(); }

 private:
  Mechanism total_;
  Levy_measure nu_;
  double alpha_imm_;
  Mechanism eve_;
};

// Split whose Eve mechanism is the shift psi(theta + .) - psi(theta): every
// atom of pi is thinned by e^{-theta ell}; the remainder becomes nu and the
// skeleton rate is 2 beta theta. Only atomic (or zero) pi is supported.
auto shifted_split(const Mechanism_params& mech, double theta) -> Split_params;

}  // namespace csbp
