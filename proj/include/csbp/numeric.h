#pragma once

#include <functional>
#include <span>
#include <vector>

namespace csbp::numeric {

// Adaptive Gauss-Kronrod (31 points) on a finite interval. Throws
// Numeric_error when the error estimate does not meet `rel_tol` with at most
// 2^max_depth segments (capped at 2^14); `what` labels the diagnostic.
auto integrate(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-12,
               unsigned max_depth = 18, const char* what = "integral") -> double;

// int_a^b f(v) dv for 0 < a <= b < inf, through v = e^x. Suited to
// integrands spread over many decades.
auto integrate_log(const std::function<double(double)>& f, double a, double b,
                   double rel_tol = 1e-12, const char* what = "integral") -> double;

// int_0^1 f(s) ds by tanh-sinh; tolerates integrable endpoint singularities.
auto integrate_unit_singular(const std::function<double(double)>& f, double rel_tol = 1e-12,
                             const char* what = "integral") -> double;

struct Root_options {
  double rel_width = 1e-12;  // stop once the bracket is this narrow (relative)
  int polish_steps = 2;      // Newton steps applied after the bracket closes
  int max_iter = 400;
};

// Root of a strictly decreasing f on (lo, hi) with f(lo) > 0 > f(hi).
// Bracketed Newton/bisection hybrid; `df` is the exact derivative.
auto solve_decreasing(const std::function<double(double)>& f,
                      const std::function<double(double)>& df, double lo, double hi,
                      double guess, const Root_options& opt = {}) -> double;

// Piecewise quintic Hermite interpolant from values, first and second
// derivatives at strictly increasing nodes.
class Quintic_hermite {
 public:
  Quintic_hermite() = default;
  Quintic_hermite(std::vector<double> x, std::vector<double> y, std::vector<double> dy,
                  std::vector<double> d2y);

  auto operator()(double x) const -> double;
  auto empty() const -> bool { return x_.empty(); }
  auto x_min() const -> double { return x_.front(); }
  auto x_max() const -> double { return x_.back(); }
  auto nodes() const -> std::span<const double> { return x_; }

 private:
  std::vector<double> x_, y_, dy_, d2y_;
};

// Sum with pairwise (cascade) reduction; order-deterministic.
auto pairwise_sum(std::span<const double> xs) -> double;

}  // namespace csbp::numeric
