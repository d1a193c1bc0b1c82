#include "csbp/laplace.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "csbp/errors.h"

namespace csbp {

void Test_functional::check() const {
  if (mu_eve.size() != times.size() || mu_total.size() != times.size()) {
    throw Domain_error("test functional: times and masses differ in length");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > 0.0) || !std::isfinite(times[i])) {
      throw Domain_error("test functional: support times must be finite and > 0");
    }
    if (i > 0 && !(times[i] > times[i - 1])) {
      throw Domain_error("test functional: support times must increase strictly");
    }
    if (!(mu_eve[i] >= 0.0) || !(mu_total[i] >= 0.0) || !std::isfinite(mu_eve[i]) ||
        !std::isfinite(mu_total[i])) {
      throw Domain_error("test functional: masses must be finite and >= 0");
    }
  }
}

auto Test_functional::is_zero() const -> bool {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (mu_eve[i] > 0.0 || mu_total[i] > 0.0) return false;
  }
  return true;
}

auto Test_functional::first_time() const -> double {
  if (times.empty()) throw Domain_error("test functional: empty support");
  return times.front();
}

auto Test_functional::last_time() const -> double {
  if (times.empty()) throw Domain_error("test functional: empty support");
  return times.back();
}

auto single_atom(double a, double eve, double total) -> Test_functional {
  auto f = Test_functional{{a}, {eve}, {total}};
  f.check();
  return f;
}

auto solve(const Mutation_split& split, const Extinction_kernel& k, const Test_functional& f,
           double m, const Laplace_options& opt) -> W_solution {
  f.check();
  if (!(m > 0.0)) throw Domain_error("laplace solve: m must be > 0");
  if (!(opt.max_step > 0.0)) throw Domain_error("laplace solve: max_step must be > 0");
  for (auto a : f.times) {
    if (a == m) throw Domain_error("laplace solve: m must not be a support time");
  }
  const auto& total = split.total();
  if (!(k.mechanism().alpha0() == total.alpha0() && k.mechanism().beta() == total.beta() &&
        k.mechanism().pi() == total.pi())) {
    throw Domain_error("laplace solve: kernel and split differ");
  }

  // Atoms strictly before m.
  auto n = static_cast<std::size_t>(std::lower_bound(f.times.begin(), f.times.end(), m) -
                                    f.times.begin());
  auto out = W_solution{};
  out.m = m;
  auto w_star = 0.0;
  auto w = 0.0;
  if (n == 0) {
    out.a_bar = 0.0;
    if (std::isfinite(m)) w_star = w = k.c(m);
    out.t = {0.0};
    out.w_star = {w_star};
    out.w = {w};
    return out;
  }
  out.a_bar = f.times[n - 1];
  if (std::isfinite(m)) w_star = w = k.c(m - out.a_bar);

  auto rhs = [&](double ws, double wv) {
    // d/ds with s = a - t running backward.
    return std::pair{-total.psi(ws), -split.psi_eve(wv) + split.phi(ws)};
  };
  auto check = [&](double t) {
    if (!std::isfinite(w_star) || !std::isfinite(w) || w_star < 0.0) {
      auto os = std::ostringstream{};
      os << "laplace solve: solution left the domain at t = " << t << " (w* = " << w_star
         << ", w = " << w << ")";
      throw Numeric_error(os.str());
    }
    if (w < w_star * (1.0 - 1e-9) - 1e-300) {
      auto os = std::ostringstream{};
      os << "laplace solve: w < w* at t = " << t;
      throw Numeric_error(os.str());
    }
  };

  // Nodes collected backward, reversed at the end.
  auto ts = std::vector<double>{out.a_bar};
  auto ws_hist = std::vector<double>{w_star};
  auto w_hist = std::vector<double>{w};
  for (auto j = n; j-- > 0;) {
    w_star += f.mu_total[j];
    w += f.mu_eve[j] + f.mu_total[j];
    auto hi = f.times[j];
    auto lo = j > 0 ? f.times[j - 1] : 0.0;
    auto t = hi;
    while (t > lo) {
      auto h = std::min(opt.max_step, t - lo);
      auto halvings = 0;
      while (std::abs(total.psi(w_star)) * h > opt.guard * w_star && w_star > 0.0) {
        if (++halvings > opt.max_halvings) {
          throw Numeric_error("laplace solve: step guard exhausted (stiff terminal value)");
        }
        h *= 0.5;
      }
      auto [k1s, k1w] = rhs(w_star, w);
      auto [k2s, k2w] = rhs(std::max(0.0, w_star + 0.5 * h * k1s), std::max(0.0, w + 0.5 * h * k1w));
      auto [k3s, k3w] = rhs(std::max(0.0, w_star + 0.5 * h * k2s), std::max(0.0, w + 0.5 * h * k2w));
      auto [k4s, k4w] = rhs(std::max(0.0, w_star + h * k3s), std::max(0.0, w + h * k3w));
      w_star += h / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
      w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
      t = (t - h - lo < 1e-12 * opt.max_step) ? lo : t - h;
      check(t);
      ts.push_back(t);
      ws_hist.push_back(w_star);
      w_hist.push_back(w);
    }
  }
  std::reverse(ts.begin(), ts.end());
  std::reverse(ws_hist.begin(), ws_hist.end());
  std::reverse(w_hist.begin(), w_hist.end());
  out.t = std::move(ts);
  out.w_star = std::move(ws_hist);
  out.w = std::move(w_hist);
  return out;
}

auto w_at_zero(const W_solution& s) -> std::pair<double, double> {
  if (s.t.empty()) throw Domain_error("w_at_zero: empty solution");
  return {s.w.front(), s.w_star.front()};
}

}  // namespace csbp
