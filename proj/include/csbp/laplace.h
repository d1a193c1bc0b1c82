#pragma once

#include <utility>
#include <vector>

#include "csbp/kernel.h"
#include "csbp/mechanism.h"

namespace csbp {

// mu_eve and mu_total supported on finitely many times 0 < a_1 < ... < a_n.
struct Test_functional {
  std::vector<double> times;
  std::vector<double> mu_eve;
  std::vector<double> mu_total;

  // Throws Domain_error on unsorted times, negative masses or size mismatch.
  void check() const;
  auto is_zero() const -> bool;
  auto size() const -> std::size_t { return times.size(); }
  auto first_time() const -> double;
  auto last_time() const -> double;
};

auto single_atom(double a, double eve, double total) -> Test_functional;

struct Laplace_options {
  double max_step = 1e-3;
  // Halve a step while |psi(w*)| h > guard * w*.
  double guard = 0.1;
  int max_halvings = 60;
};

// Backward solution on [0, a_bar] (nodes increasing, right-continuous
// values). On (a_bar, m) both functions equal c(m - t); for m = inf they
// vanish there.
struct W_solution {
  double m = 0.0;
  double a_bar = 0.0;
  std::vector<double> t;
  std::vector<double> w_star;
  std::vector<double> w;
};

// Between atoms, w*' = psi(w*) and w' = psi_eve(w) - phi(w*); at an atom a_j
// the left limits pick up w*(a_j-) = w*(a_j) + mu_total{a_j} and
// w(a_j-) = w(a_j) + mu_eve{a_j} + mu_total{a_j}. Classical RK4 on the
// joint system with atoms on nodes. m may be +inf; finite m must avoid the
// support.
auto solve(const Mutation_split& split, const Extinction_kernel& k, const Test_functional& f,
           double m, const Laplace_options& opt = {}) -> W_solution;

// (w(0), w*(0)).
auto w_at_zero(const W_solution& s) -> std::pair<double, double>;

}  // namespace csbp
