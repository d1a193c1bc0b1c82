#pragma once

#include "csbp/mechanism.h"
#include "csbp/numeric.h"

namespace csbp {

struct Kernel_options {
  enum class Mode { automatic, closed_form, numeric };
  Mode mode = Mode::automatic;
  double quad_tol = 1e-13;
  // int_c^inf dv/psi is split at tail_factor * max(1, c).
  double tail_factor = 1e6;
  // Memo table for c on a log grid of values [memo_c_min, memo_c_max].
  bool memo = true;
  int memo_per_decade = 24;
  double memo_c_min = 1e-10;
  double memo_c_max = 1e12;
  double memo_max_rel_error = 1e-6;
};

// Extinction kernel of a mechanism:
//   c(t)      with int_{c(t)}^inf dv/psi(v) = t         (N[tau >= t])
//   u(l, t)   with int_{u}^{l} dv/psi(v) = t            (N[1 - e^{-l Y_t}])
// Closed forms are used for psi = alpha0 l + beta l^2 and psi = l^gamma;
// everything else goes through quadrature and monotone root finding. The
// numeric mode memoises c on a log grid (quintic Hermite in log-log
// coordinates, exact derivatives from c' = -psi(c)); the table is checked
// against direct quadrature when built.
class Extinction_kernel {
 public:
  explicit Extinction_kernel(Mechanism mech, Kernel_options opt = {});

  auto mechanism() const -> const Mechanism& { return mech_; }
  auto closed_form() const -> bool { return closed_; }
  auto options() const -> const Kernel_options& { return opt_; }

  // Fast path (closed form or memo table); falls back to c_direct outside
  // the table range.
  auto c(double t) const -> double;
  // Closed form or a fresh root solve, never the memo table.
  auto c_direct(double t) const -> double;
  // |c'(m)| = psi(c(m)).
  auto c_density(double m) const -> double;
  // The t with c(t) = value; value = 0 maps to +inf.
  auto c_inverse(double value) const -> double;
  auto u(double lambda, double t) const -> double;

  // int_a^b dv/psi(v) for 0 < a <= b <= inf.
  auto inverse_psi_integral(double a, double b) const -> double;

  // Largest relative deviation seen when the memo table was validated.
  auto memo_error() const -> double { return memo_error_; }

 private:
  auto tail_integral(double from) const -> double;
  void build_memo();

  Mechanism mech_;
  Kernel_options opt_;
  bool closed_ = false;
  numeric::Quintic_hermite log_c_;  // ln c as a function of ln t
  double memo_error_ = 0.0;
};

auto c_of(const Extinction_kernel& k, double t) -> double;
auto c_density(const Extinction_kernel& k, double m) -> double;
auto u_of(const Extinction_kernel& k, double lambda, double t) -> double;

// int_0^m phi'(c(t)) dt.
auto phi_c_integral(const Extinction_kernel& k, const Mutation_split& split, double m) -> double;
// P(tau_eve = m | tau = m) = exp(-int_0^m phi'(c(t)) dt).
auto simultaneous_extinction_prob(const Extinction_kernel& k, const Mutation_split& split,
                                  double m) -> double;
// Q_m(T0 > r) = exp(-int_0^r phi'(c(m - t)) dt), 0 <= r < m.
auto t0_survival(const Extinction_kernel& k, const Mutation_split& split, double m, double r)
    -> double;
// N[H_[T_m, L_m] > a, m <= H_max < m + eps]
//   = c'(m) (c(m - a) - c(m - a + eps)) / c'(m - a).
auto williams_window_mass(const Extinction_kernel& k, double m, double a, double eps) -> double;

}  // namespace csbp
