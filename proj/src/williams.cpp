#include "csbp/williams.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "csbp/draws.h"
#include "csbp/errors.h"
#include "csbp/numeric.h"

namespace csbp {

namespace {

// Upper bound of the drift density along the spine (constant drift plus the
// sub-cutoff power-law atoms at their largest).
auto drift_bound(const Extinction_kernel& k, const Spine_measure& s) -> double {
  if (s.small_atom_cutoff == 0.0) return s.drift;
  const auto& pi = k.mechanism().pi();
  auto gam = pi.gamma();
  return s.drift + s.small_atom_share * pi.density_scale() *
                       std::pow(s.small_atom_cutoff, 2.0 - gam) / (2.0 - gam);
}

auto grid_index(double t, double delta) -> std::size_t {
  return static_cast<std::size_t>(std::floor(t / delta * (1.0 + 1e-12)));
}

void add_path(std::vector<double>& into, const Path& p, double delta) {
  if (p.values.empty()) return;
  auto first = static_cast<std::size_t>(std::llround(p.t0 / delta));
  for (std::size_t j = 0; j < p.values.size() && first + j < into.size(); ++j) {
    into[first + j] += p.values[j];
  }
}

void finish_aggregate(Path& p) {
  auto last = p.values.size();
  while (last > 0 && p.values[last - 1] == 0.0) --last;
  p.extinction_time = last == 0 ? 0.0 : p.time(last);
}

}  // namespace

Decomposer::Decomposer(const Mutation_split& split, const Extinction_kernel& k,
                       Williams_options opt)
    : split_{split}, k_{&k}, opt_{opt}, excursions_{k, split_, opt.eps, opt.forward} {
  if (!(opt_.delta > 0.0)) throw Domain_error("williams: delta must be > 0");
  if (!(opt_.max_expected_candidates > 0.0)) {
    throw Config_error("williams: candidate budget must be > 0");
  }
}

auto Decomposer::sample_clock(double m, const Replica_streams& rs, double until) const
    -> Marked_spine {
  auto gs = rs.stream(Stream_role::spine);
  auto gc = rs.stream(Stream_role::clock);
  auto out = Marked_spine{};
  out.spine = sample_spine(split_, *k_, m, gs, opt_.spine, until);
  out.clock = sample_t0(split_, out.spine, gc);
  return out;
}

auto Decomposer::expected_graft_count(const Spine_measure& spine, double until) const -> double {
  auto m = spine.m;
  auto c_eps = excursions_.c_eps();
  auto eps = opt_.eps;
  auto stop = std::min(until, m - eps);
  auto total = 0.0;
  for (const auto& a : spine.atoms) {
    if (a.t < stop) total += a.ell * std::max(0.0, c_eps - k_->c(m - a.t));
  }
  if (stop > 0.0 && drift_bound(*k_, spine) > 0.0) {
    auto f = [&](double t) {
      return spine_drift_density(*k_, spine, t) * std::max(0.0, c_eps - k_->c(m - t));
    };
    total += numeric::integrate(f, 0.0, stop, 1e-9, 18, "expected graft count");
  }
  return total;
}

auto Decomposer::assemble(double m, const Replica_streams& rs, const Assemble_request& req) const
    -> Decomposition_sample {
  if (!(m > opt_.eps) || !std::isfinite(m)) {
    throw Domain_error("assemble: need eps < m < inf");
  }
  auto marked = sample_clock(m, rs, req.observe_until);
  auto out = Decomposition_sample{};
  out.m = m;
  out.spine = std::move(marked.spine);
  out.clock = marked.clock;
  out.eps = opt_.eps;
  out.observe_until = std::min(req.observe_until, m);
  const auto& spine = out.spine;
  auto until = out.observe_until;
  auto delta = opt_.delta;
  auto c_eps = excursions_.c_eps();

  auto bound = drift_bound(*k_, spine);
  auto mass_before = 0.0;
  for (const auto& a : spine.atoms) {
    if (a.t < until) mass_before += a.ell;
  }
  out.expected_candidates = c_eps * (mass_before + bound * until);
  if (out.expected_candidates > opt_.max_expected_candidates) {
    auto os = std::ostringstream{};
    os << "assemble: expected " << out.expected_candidates << " graft candidates exceeds the budget "
       << opt_.max_expected_candidates << " (eps " << opt_.eps << ", m " << m << ")";
    throw Config_error(os.str());
  }

  auto nodes = grid_index(until, delta) + 1;
  out.aggregate.total = Path{0.0, delta, std::vector<double>(nodes, 0.0), never};
  out.aggregate.eve = Path{0.0, delta, std::vector<double>(nodes, 0.0), never};

  auto g = rs.stream(Stream_role::grafts);
  auto graft = [&](double t) {
    ++out.candidates;
    auto eve_typed = t < out.clock.t0;
    auto e = excursions_.sample({t, m, until, delta, eve_typed}, g);
    if (!e) return;
    ++out.accepted;
    add_path(out.aggregate.total.values, e->total, delta);
    if (eve_typed) add_path(out.aggregate.eve.values, e->eve, delta);
    if (req.keep_grafts) {
      out.grafts.push_back({t, eve_typed, std::move(e->total), std::move(e->eve)});
    }
  };
  for (const auto& a : spine.atoms) {
    if (!(a.t < until)) break;
    auto n = draw::poisson(a.ell * c_eps, g);
    for (std::int64_t i = 0; i < n; ++i) graft(a.t);
  }
  if (bound > 0.0) {
    auto n = draw::poisson(bound * c_eps * until, g);
    auto thin = spine.small_atom_cutoff > 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      auto t = g.uniform() * until;
      if (thin && !draw::bernoulli(spine_drift_density(*k_, spine, t) / bound, g)) continue;
      graft(t);
    }
  }
  if (req.keep_grafts) {
    std::stable_sort(out.grafts.begin(), out.grafts.end(),
                     [](const Grafted_excursion& a, const Grafted_excursion& b) {
                       return a.t_graft < b.t_graft;
                     });
  }
  finish_aggregate(out.aggregate.total);
  finish_aggregate(out.aggregate.eve);
  return out;
}

auto truncation_bias_budget(const Decomposer& d, const Test_functional& f) -> double {
  f.check();
  if (f.is_zero()) return 0.0;
  const auto& k = d.kernel();
  const auto& mech = k.mechanism();
  // Only grafts born in (a_k - eps, a_k] are misrepresented at a_k. Given the
  // spine they form a Poisson cluster B (exact) or B' (sampled) independent
  // of everything else, so the error in E[1 - e^{-X}] is at most
  // max(1 - E e^{-B}, 1 - E e^{-B'}) <= max(E B, E B') <= eps * spine mass
  // rate * sup N[Y] <= eps psi''(c(m - a_k)) per unit of |c'(m)| dm.
  auto total = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    auto weight = f.mu_eve[j] + f.mu_total[j];
    if (weight == 0.0) continue;
    auto a = f.times[j];
    auto top = k.c(a);
    // x = c(m) over (0, c(a)].
    auto g = [&](double s) {
      auto x = s * top;
      if (!(x > 0.0) || !(x < top)) return 0.0;
      // m -> inf: c(m - a) ~ c(m).
      if (x < 1e-100) return top * mech.psi_second(x);
      auto m = k.c_inverse(x);
      if (!(m > a)) return 0.0;
      return top * mech.psi_second(k.c(m - a));
    };
    total += weight * numeric::integrate_unit_singular(g, 1e-7, "bias budget");
  }
  return d.options().eps * total;
}

auto laplace_estimate(const Decomposer& d, const Test_functional& f, const Laplace_mc& mc)
    -> Laplace_estimate {
  f.check();
  auto out = Laplace_estimate{};
  if (f.is_zero()) {
    out.value = out.window = out.tail = Mc_estimate{mc.n, 0.0, 0.0, std::nullopt};
    return out;
  }
  if (mc.n < 4) throw Domain_error("laplace_estimate: need n >= 4");
  const auto& k = d.kernel();
  auto delta = d.options().delta;
  auto a1 = f.first_time();
  auto an = f.last_time();
  if (!(mc.m_max > an)) throw Domain_error("laplace_estimate: m_max must exceed the support");
  auto nodes = std::vector<std::size_t>{};
  for (auto a : f.times) {
    auto i = std::llround(a / delta);
    if (std::abs(static_cast<double>(i) * delta - a) > 1e-9 * delta) {
      throw Domain_error("laplace_estimate: support times must lie on the grid");
    }
    nodes.push_back(static_cast<std::size_t>(i));
  }
  auto lo = std::max(a1, d.options().eps * (1.0 + 1e-9));
  out.window_weight = k.c(lo) - k.c(mc.m_max);
  out.tail_bound = k.c(mc.m_max);
  out.bias_budget = truncation_bias_budget(d, f);

  auto integrand = [&](double m, const Replica_streams& rs) {
    auto s = d.assemble(m, rs, {an, false});
    auto x = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
      x += f.mu_eve[j] * s.aggregate.eve.at(nodes[j]) + f.mu_total[j] * s.aggregate.total.at(nodes[j]);
    }
    return -std::expm1(-x);
  };

  auto share = mc.sample_tail ? out.window_weight / (out.window_weight + out.tail_bound) : 1.0;
  auto n_window = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(share * static_cast<double>(mc.n))), 2, mc.n);
  auto n_tail = mc.sample_tail ? std::max<std::size_t>(2, mc.n - n_window) : 0;

  auto window = [&](const Replica_streams& rs) {
    auto gh = rs.stream(Stream_role::horizon);
    return out.window_weight * integrand(sample_m(k, lo, mc.m_max, gh), rs);
  };
  out.window = estimate(window, n_window, mc.seed, mc.threads);
  out.value = out.window;
  if (mc.sample_tail) {
    auto tail = [&](const Replica_streams& rs) {
      auto gh = rs.stream(Stream_role::tail);
      return out.tail_bound * integrand(sample_m(k, mc.m_max, never, gh), rs);
    };
    out.tail = estimate(tail, n_tail, mix64(mc.seed ^ 0x7A11'7A11ull), mc.threads);
    out.value.n = out.window.n + out.tail.n;
    out.value.mean = out.window.mean + out.tail.mean;
    out.value.std_error = std::hypot(out.window.std_error, out.tail.std_error);
  }
  return out;
}

}  // namespace csbp
