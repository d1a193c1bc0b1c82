#include "csbp/kernel.h"

#include <cmath>
#include <limits>
#include <sstream>

#include "csbp/errors.h"

namespace csbp {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

void require_positive_time(double t, const char* what) {
  if (!(t > 0.0)) {
    throw Domain_error(std::string(what) + ": time must be > 0, got " + std::to_string(t));
  }
}

auto same_mechanism(const Mechanism& a, const Mechanism& b) -> bool {
  return a.alpha0() == b.alpha0() && a.beta() == b.beta() && a.pi() == b.pi();
}

void require_consistent(const Extinction_kernel& k, const Mutation_split& split) {
  if (!same_mechanism(k.mechanism(), split.total())) {
    throw Domain_error("kernel and split describe different total mechanisms");
  }
}

}  // namespace

Extinction_kernel::Extinction_kernel(Mechanism mech, Kernel_options opt)
    : mech_{std::move(mech)}, opt_{opt} {
  auto has_closed_form = mech_.is_quadratic() || mech_.is_stable();
  switch (opt_.mode) {
    case Kernel_options::Mode::automatic:
      closed_ = has_closed_form;
      break;
    case Kernel_options::Mode::closed_form:
      if (!has_closed_form) {
        throw Unsupported_error("closed-form kernel requires a quadratic or stable mechanism");
      }
      closed_ = true;
      break;
    case Kernel_options::Mode::numeric:
      closed_ = false;
      break;
  }
  if (!closed_ && opt_.memo) build_memo();
}

auto Extinction_kernel::tail_integral(double from) const -> double {
  // v = from / s; dv/psi = from ds / (s^2 psi) = (v / from) (v / psi) ds.
  auto g = [&](double s) {
    auto v = from / s;
    if (!std::isfinite(v)) return 0.0;
    auto p = mech_.psi(v);
    if (!std::isfinite(p)) return 0.0;
    return (v / from) * (v / p);
  };
  return numeric::integrate_unit_singular(g, opt_.quad_tol, "tail of int dv/psi");
}

auto Extinction_kernel::inverse_psi_integral(double a, double b) const -> double {
  if (!(a > 0.0) || !(b >= a)) {
    throw Domain_error("inverse_psi_integral: need 0 < a <= b");
  }
  auto inv_psi = [&](double v) { return 1.0 / mech_.psi(v); };
  if (std::isinf(b)) {
    auto cut = opt_.tail_factor * std::max(1.0, a);
    return numeric::integrate_log(inv_psi, a, cut, opt_.quad_tol, "int dv/psi") +
           tail_integral(cut);
  }
  return numeric::integrate_log(inv_psi, a, b, opt_.quad_tol, "int dv/psi");
}

auto Extinction_kernel::c_inverse(double value) const -> double {
  if (!(value >= 0.0)) throw Domain_error("c_inverse: value must be >= 0");
  if (value == 0.0) return inf;
  if (std::isinf(value)) return 0.0;
  if (closed_) {
    if (mech_.is_quadratic()) {
      auto a = mech_.alpha0();
      auto b = mech_.beta();
      return a > 0.0 ? std::log1p(a / (b * value)) / a : 1.0 / (b * value);
    }
    auto g = mech_.pi().gamma();
    return std::pow(value, 1.0 - g) / (g - 1.0);
  }
  return inverse_psi_integral(value, inf);
}

auto Extinction_kernel::c_direct(double t) const -> double {
  require_positive_time(t, "c");
  if (std::isinf(t)) return 0.0;
  if (closed_) {
    if (mech_.is_quadratic()) {
      auto a = mech_.alpha0();
      auto b = mech_.beta();
      return a > 0.0 ? a / (b * std::expm1(a * t)) : 1.0 / (b * t);
    }
    auto g = mech_.pi().gamma();
    return std::pow((g - 1.0) * t, -1.0 / (g - 1.0));
  }
  // Solve F(e^x) = t in x = ln c, F(c) = int_c^inf dv/psi decreasing.
  auto f = [&](double x) { return inverse_psi_integral(std::exp(x), inf) - t; };
  auto df = [&](double x) {
    auto v = std::exp(x);
    return -v / mech_.psi(v);
  };
  auto x0 = 0.0;
  if (!log_c_.empty()) {
    auto lt = std::log(t);
    if (lt >= log_c_.x_min() && lt <= log_c_.x_max()) x0 = log_c_(lt);
  }
  auto lo = x0;
  auto hi = x0;
  auto step = 0.5;
  if (f(x0) > 0.0) {
    do {
      if (hi >= 700.0) throw Numeric_error("c: bracket search overflow, t = " + std::to_string(t));
      lo = hi;
      hi = std::min(hi + step, 700.0);
      step *= 2.0;
    } while (f(hi) > 0.0);
  } else {
    do {
      // c below the smallest normal double: report 0.
      if (lo <= -708.0) return 0.0;
      hi = lo;
      lo = std::max(lo - step, -708.0);
      step *= 2.0;
    } while (f(lo) < 0.0);
  }
  return std::exp(numeric::solve_decreasing(f, df, lo, hi, 0.5 * (lo + hi)));
}

auto Extinction_kernel::c(double t) const -> double {
  if (closed_ || log_c_.empty()) return c_direct(t);
  require_positive_time(t, "c");
  auto lt = std::log(t);
  if (lt >= log_c_.x_min() && lt <= log_c_.x_max()) return std::exp(log_c_(lt));
  return c_direct(t);
}

auto Extinction_kernel::c_density(double m) const -> double { return mech_.psi(c(m)); }

auto Extinction_kernel::u(double lambda, double t) const -> double {
  if (!(lambda >= 0.0)) throw Domain_error("u: lambda must be >= 0");
  if (!(t >= 0.0)) throw Domain_error("u: t must be >= 0");
  if (lambda == 0.0) return 0.0;
  if (t == 0.0) return lambda;
  if (std::isinf(lambda)) return c_direct(t);
  if (closed_) {
    if (mech_.is_quadratic()) {
      auto a = mech_.alpha0();
      auto b = mech_.beta();
      if (a > 0.0) {
        auto p = std::exp(-a * t);
        auto q = -b * std::expm1(-a * t) / a;
        return p * lambda / (1.0 + q * lambda);
      }
      return lambda / (1.0 + b * lambda * t);
    }
    auto g = mech_.pi().gamma();
    return std::pow(std::pow(lambda, 1.0 - g) + (g - 1.0) * t, -1.0 / (g - 1.0));
  }
  auto top = std::log(lambda);
  auto f = [&](double x) {
    auto v = std::min(std::exp(x), lambda);
    return inverse_psi_integral(v, lambda) - t;
  };
  auto df = [&](double x) {
    auto v = std::exp(x);
    return -v / mech_.psi(v);
  };
  // Local quadratic model psi(v) ~ psi(lambda) (v/lambda)^2 for the start.
  auto guess = std::log(lambda / (1.0 + t * mech_.psi(lambda) / lambda));
  auto lo = guess;
  auto hi = top;
  if (f(guess) < 0.0) {
    hi = guess;
    auto step = 0.5;
    do {
      if (hi <= -708.0) return 0.0;
      lo = std::max(hi - step, -708.0);
      if (f(lo) >= 0.0) break;
      hi = lo;
      step *= 2.0;
    } while (true);
  }
  if (lo >= hi) return std::exp(lo);
  return std::exp(numeric::solve_decreasing(f, df, lo, hi, 0.5 * (lo + hi)));
}

void Extinction_kernel::build_memo() {
  auto decades = std::log10(opt_.memo_c_max / opt_.memo_c_min);
  auto n = static_cast<std::size_t>(std::ceil(decades * opt_.memo_per_decade)) + 1;
  auto ratio = std::pow(opt_.memo_c_min / opt_.memo_c_max, 1.0 / static_cast<double>(n - 1));
  auto ys = std::vector<double>(n);
  auto ts = std::vector<double>(n);
  ys[0] = opt_.memo_c_max;
  ts[0] = inverse_psi_integral(ys[0], inf);
  for (std::size_t j = 1; j < n; ++j) {
    ys[j] = j + 1 == n ? opt_.memo_c_min : ys[j - 1] * ratio;
    ts[j] = ts[j - 1] + inverse_psi_integral(ys[j], ys[j - 1]);
  }
  auto x = std::vector<double>(n);
  auto z = std::vector<double>(n);
  auto dz = std::vector<double>(n);
  auto d2z = std::vector<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    auto y = ys[j];
    auto t = ts[j];
    auto p = mech_.psi(y);
    auto dp = mech_.psi_prime(y);
    x[j] = std::log(t);
    z[j] = std::log(y);
    dz[j] = -t * p / y;
    d2z[j] = -t * p / y + t * t * p * (dp * y - p) / (y * y);
  }
  log_c_ = numeric::Quintic_hermite(std::move(x), std::move(z), std::move(dz), std::move(d2z));

  memo_error_ = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    auto y_mid = std::sqrt(ys[j] * ys[j - 1]);
    auto t_mid = ts[j - 1] + inverse_psi_integral(y_mid, ys[j - 1]);
    auto approx = std::exp(log_c_(std::log(t_mid)));
    memo_error_ = std::max(memo_error_, std::abs(approx / y_mid - 1.0));
  }
  if (memo_error_ > opt_.memo_max_rel_error) {
    auto os = std::ostringstream{};
    os << "c memo table error " << memo_error_ << " exceeds budget " << opt_.memo_max_rel_error;
    throw Numeric_error(os.str());
  }
}

auto c_of(const Extinction_kernel& k, double t) -> double { return k.c_direct(t); }

auto c_density(const Extinction_kernel& k, double m) -> double {
  require_positive_time(m, "c_density");
  return k.mechanism().psi(k.c_direct(m));
}

auto u_of(const Extinction_kernel& k, double lambda, double t) -> double { return k.u(lambda, t); }

auto phi_c_integral(const Extinction_kernel& k, const Mutation_split& split, double m) -> double {
  require_positive_time(m, "phi_c_integral");
  require_consistent(k, split);
  if (split.nu().is_zero()) return split.alpha_imm() * m;
  auto integrand = [&](double t) { return split.phi_prime(k.c(t)); };
  return numeric::integrate(integrand, 0.0, m, 1e-12, 18, "int phi'(c(t)) dt");
}

auto simultaneous_extinction_prob(const Extinction_kernel& k, const Mutation_split& split,
                                  double m) -> double {
  return std::exp(-phi_c_integral(k, split, m));
}

auto t0_survival(const Extinction_kernel& k, const Mutation_split& split, double m, double r)
    -> double {
  require_positive_time(m, "t0_survival");
  require_consistent(k, split);
  if (!(r >= 0.0 && r < m)) throw Domain_error("t0_survival: need 0 <= r < m");
  if (r == 0.0) return 1.0;
  if (split.nu().is_zero()) return std::exp(-split.alpha_imm() * r);
  auto integrand = [&](double s) { return split.phi_prime(k.c(s)); };
  return std::exp(-numeric::integrate(integrand, m - r, m, 1e-12, 18, "int phi'(c(m-t)) dt"));
}

auto williams_window_mass(const Extinction_kernel& k, double m, double a, double eps) -> double {
  if (!(a > 0.0 && a < m)) throw Domain_error("williams_window_mass: need 0 < a < m");
  if (!(eps > 0.0)) throw Domain_error("williams_window_mass: eps must be > 0");
  return c_density(k, m) * (k.c_direct(m - a) - k.c_direct(m - a + eps)) / c_density(k, m - a);
}

}  // namespace csbp
