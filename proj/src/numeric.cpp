#include "csbp/numeric.h"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "csbp/errors.h"

namespace csbp::numeric {

namespace {

[[noreturn]] void quadrature_failure(const char* what, double a, double b, double value,
                                     double err) {
  auto os = std::ostringstream{};
  os.precision(17);
  os << what << ": quadrature did not converge on [" << a << ", " << b << "], value " << value
     << ", error estimate " << err;
  throw Numeric_error(os.str());
}

}  // namespace

auto integrate(const std::function<double(double)>& f, double a, double b, double rel_tol,
               unsigned max_depth, const char* what) -> double {
  if (a == b) return 0.0;
  // Globally adaptive: always bisect the segment with the largest error.
  // Boost's recursive driver is not used because its error estimate is not
  // rescaled to the sub-interval width, which stalls on short intervals.
  struct Segment {
    double a, b, value, err, l1;
    auto operator<(const Segment& o) const -> bool { return err < o.err; }
  };
  auto rule = [&](double lo, double hi) {
    auto err = 0.0;
    auto l1 = 0.0;
    auto v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 0, 0.0,
                                                                           &err, &l1);
    return Segment{lo, hi, v, err * std::abs(hi - lo) * 0.5, l1};
  };
  auto heap = std::priority_queue<Segment>{};
  heap.push(rule(a, b));
  auto value = heap.top().value;
  auto err = heap.top().err;
  auto l1 = heap.top().l1;
  auto max_segments = std::size_t{1} << std::min(max_depth, 14u);
  while (err > rel_tol * l1 && heap.size() < max_segments) {
    auto s = heap.top();
    heap.pop();
    auto mid = 0.5 * (s.a + s.b);
    auto left = rule(s.a, mid);
    auto right = rule(mid, s.b);
    value += left.value + right.value - s.value;
    err += left.err + right.err - s.err;
    l1 += left.l1 + right.l1 - s.l1;
    heap.push(left);
    heap.push(right);
    // Running sums drift; resum once the estimate looks converged.
    if (err <= rel_tol * l1) {
      value = err = l1 = 0.0;
      auto copy = heap;
      while (!copy.empty()) {
        value += copy.top().value;
        err += copy.top().err;
        l1 += copy.top().l1;
        copy.pop();
      }
    }
  }
  if (!std::isfinite(value) || err > 1e3 * rel_tol * std::max(l1, 1e-300)) {
    quadrature_failure(what, a, b, value, err);
  }
  return value;
}

auto integrate_log(const std::function<double(double)>& f, double a, double b, double rel_tol,
                   const char* what) -> double {
  if (a == b) return 0.0;
  auto g = [&](double x) {
    auto v = std::exp(x);
    return v * f(v);
  };
  return integrate(g, std::log(a), std::log(b), rel_tol, 18, what);
}

auto integrate_unit_singular(const std::function<double(double)>& f, double rel_tol,
                             const char* what) -> double {
  thread_local auto integrator = boost::math::quadrature::tanh_sinh<double>{};
  auto err = 0.0;
  auto l1 = 0.0;
  auto g = [&f](double s) { return f(s); };
  auto value = integrator.integrate(g, 0.0, 1.0, rel_tol, &err, &l1);
  if (!std::isfinite(value) || err > 1e3 * rel_tol * std::max(l1, 1e-300)) {
    quadrature_failure(what, 0.0, 1.0, value, err);
  }
  return value;
}

auto solve_decreasing(const std::function<double(double)>& f,
                      const std::function<double(double)>& df, double lo, double hi,
                      double guess, const Root_options& opt) -> double {
  if (!(lo < hi)) throw Numeric_error("solve_decreasing: empty bracket");
  auto x = std::clamp(guess, lo, hi);
  if (x == lo || x == hi) x = 0.5 * (lo + hi);
  for (int it = 0; it < opt.max_iter; ++it) {
    auto fx = f(x);
    if (fx == 0.0) return x;
    if (fx > 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    if (hi - lo <= opt.rel_width * (1.0 + std::abs(x))) break;
    auto d = df(x);
    auto next = (d < 0.0 && std::isfinite(d)) ? x - fx / d : 0.5 * (lo + hi);
    // Newton steps that leave the bracket, or shrink it too slowly, fall
    // back to bisection.
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) < 1e-3 * opt.rel_width * (1.0 + std::abs(x))) {
      x = next;
      break;
    }
    x = next;
    if (it == opt.max_iter - 1) {
      throw Numeric_error("solve_decreasing: no convergence in max_iter iterations");
    }
  }
  for (int k = 0; k < opt.polish_steps; ++k) {
    auto d = df(x);
    if (!(d < 0.0) || !std::isfinite(d)) break;
    auto next = x - f(x) / d;
    if (!std::isfinite(next)) break;
    x = next;
  }
  return x;
}

Quintic_hermite::Quintic_hermite(std::vector<double> x, std::vector<double> y,
                                 std::vector<double> dy, std::vector<double> d2y)
    : x_{std::move(x)}, y_{std::move(y)}, dy_{std::move(dy)}, d2y_{std::move(d2y)} {
  if (x_.size() < 2 || y_.size() != x_.size() || dy_.size() != x_.size() ||
      d2y_.size() != x_.size()) {
    throw Numeric_error("Quintic_hermite: inconsistent node arrays");
  }
  for (std::size_t i = 1; i < x_.size(); ++i) {
    if (!(x_[i] > x_[i - 1])) throw Numeric_error("Quintic_hermite: nodes not increasing");
  }
}

auto Quintic_hermite::operator()(double x) const -> double {
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  auto i = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - x_.begin() - 1, 0,
                                                              static_cast<std::ptrdiff_t>(x_.size()) - 2));
  auto h = x_[i + 1] - x_[i];
  auto s = (x - x_[i]) / h;
  auto s2 = s * s;
  auto s3 = s2 * s;
  auto s4 = s3 * s;
  auto s5 = s4 * s;
  auto h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
  auto h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
  auto h2 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
  auto h3 = 0.5 * (s3 - 2.0 * s4 + s5);
  auto h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
  auto h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
  return y_[i] * h0 + h * dy_[i] * h1 + h * h * d2y_[i] * h2 + h * h * d2y_[i + 1] * h3 +
         h * dy_[i + 1] * h4 + y_[i + 1] * h5;
}

auto pairwise_sum(std::span<const double> xs) -> double {
  if (xs.size() <= 8) {
    auto s = 0.0;
    for (auto v : xs) s += v;
    return s;
  }
  auto half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

}  // namespace csbp::numeric
