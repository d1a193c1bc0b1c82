#include "csbp/forward.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "csbp/draws.h"
#include "csbp/errors.h"

namespace csbp {

namespace {

void require_step(double delta, double horizon) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw Domain_error("grid step must be finite and > 0");
  if (!(horizon > 0.0)) throw Domain_error("horizon must be > 0");
}

auto grid_nodes(double horizon, double delta) -> std::size_t {
  // Tolerate horizons that are a whole number of steps up to rounding.
  return static_cast<std::size_t>(std::floor(horizon / delta * (1.0 + 1e-12))) + 1;
}

// Pure-jump flow of a single type over h: jumps at rate y * rate, each
// increasing y. Exact (Gillespie).
auto jump_flow(double y, double h, const Jump_source& jumps, Philox& g) -> double {
  if (jumps.rate() == 0.0) return y;
  auto t = 0.0;
  while (y > 0.0) {
    t += draw::exponential(1.0 / (y * jumps.rate()), g);
    if (t >= h) break;
    y += jumps.size(g);
  }
  return y;
}

}  // namespace

auto Jump_source::from_atoms(const Levy_measure& pi) -> Jump_source {
  auto s = Jump_source{};
  if (pi.kind() != Levy_measure::Kind::atoms) return s;
  auto acc = 0.0;
  for (auto a : pi.atom_list()) {
    acc += a.mass;
    s.cumulative_.push_back(acc);
    s.sizes_.push_back(a.location);
  }
  s.rate_ = acc;
  return s;
}

auto Jump_source::pareto_tail(const Levy_measure& pi, double cut) -> Jump_source {
  auto s = Jump_source{};
  s.gamma_ = pi.gamma();
  s.cut_ = cut;
  s.rate_ = pi.density_scale() * std::pow(cut, -s.gamma_) / s.gamma_;
  return s;
}

auto Jump_source::size(Philox& g) const -> double {
  if (cut_ > 0.0) return cut_ * std::pow(g.uniform(), -1.0 / gamma_);
  if (sizes_.size() == 1) return sizes_[0];
  auto target = g.uniform() * rate_;
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  auto i = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), sizes_.size() - 1);
  return sizes_[i];
}

auto feller_step(double y, double alpha, double beta, double dt, Philox& g) -> double {
  if (!(y > 0.0)) return 0.0;
  if (!(dt > 0.0)) return y;
  auto p = alpha > 0.0 ? std::exp(-alpha * dt) : 1.0;
  if (beta == 0.0) return y * p;
  auto q = alpha > 0.0 ? -beta * std::expm1(-alpha * dt) / alpha : beta * dt;
  auto mean = y * p / q;
  if (mean > 1e15) {
    // Poisson-Gamma with ~1e15 terms: Gaussian to well below double noise.
    return std::max(0.0, y * p + std::sqrt(2.0 * q * y * p) * draw::normal(g));
  }
  auto n = draw::poisson(mean, g);
  if (n == 0) return 0.0;
  return draw::gamma(static_cast<double>(n), q, g);
}

auto step_quadratic_exact(double y, double dt, const Mechanism& mech, Philox& g) -> double {
  if (!mech.is_quadratic()) throw Unsupported_error("step_quadratic_exact: mechanism has jumps");
  if (!(dt > 0.0)) throw Domain_error("step_quadratic_exact: dt must be > 0");
  return feller_step(y, mech.alpha0(), mech.beta(), dt, g);
}

Forward_stepper::Forward_stepper(const Mechanism& mech, Forward_options opt)
    : alpha_{mech.alpha0()}, beta_{mech.beta()} {
  const auto& pi = mech.pi();
  switch (pi.kind()) {
    case Levy_measure::Kind::zero:
      break;
    case Levy_measure::Kind::atoms:
      alpha_ += pi.first_moment();
      jumps_ = Jump_source::from_atoms(pi);
      break;
    case Levy_measure::Kind::power_law: {
      if (!(opt.small_jump_variance > 0.0)) {
        throw Validation_error("small_jump_variance must be > 0");
      }
      auto g = pi.gamma();
      auto scale = pi.density_scale();
      // int_0^cut l^2 pi = scale cut^{2-g} / (2-g).
      ell_cut_ = std::pow(opt.small_jump_variance * (2.0 - g) / scale, 1.0 / (2.0 - g));
      beta_ += 0.5 * opt.small_jump_variance;
      alpha_ += scale * std::pow(ell_cut_, 1.0 - g) / (g - 1.0);
      jumps_ = Jump_source::pareto_tail(pi, ell_cut_);
      break;
    }
  }
}

auto Forward_stepper::step(double y, double h, Philox& g) const -> double {
  if (!(y > 0.0)) return 0.0;
  if (jumps_.rate() == 0.0) return feller_step(y, alpha_, beta_, h, g);
  y = jump_flow(y, 0.5 * h, jumps_, g);
  y = feller_step(y, alpha_, beta_, h, g);
  return jump_flow(y, 0.5 * h, jumps_, g);
}

Pair_stepper::Pair_stepper(const Mutation_split& split, Forward_options opt)
    : eve_{split.eve(), opt},
      mutant_{split.total(), opt},
      immigration_{Jump_source::from_atoms(split.nu())},
      alpha_imm_{split.alpha_imm()},
      exact_{eve_.exact() && mutant_.exact() && !split.has_mutation()} {}

void Pair_stepper::jump_flow(double& eve, double& mutant, double h, Philox& g) const {
  auto r_eve = eve_.jumps().rate();
  auto r_imm = immigration_.rate();
  auto r_mut = mutant_.jumps().rate();
  if (r_eve + r_imm + r_mut == 0.0) return;
  auto t = 0.0;
  while (true) {
    auto a = eve * (r_eve + r_imm);
    auto b = mutant * r_mut;
    if (!(a + b > 0.0)) return;
    t += draw::exponential(1.0 / (a + b), g);
    if (t >= h) return;
    auto pick = g.uniform() * (a + b);
    if (pick < eve * r_eve) {
      eve += eve_.jumps().size(g);
    } else if (pick < a) {
      mutant += immigration_.size(g);
    } else {
      mutant += mutant_.jumps().size(g);
    }
  }
}

void Pair_stepper::step(double& eve, double& mutant, double h, Philox& g) const {
  auto half = 0.5 * h;
  mutant += alpha_imm_ * eve * half;
  jump_flow(eve, mutant, half, g);
  eve = feller_step(eve, eve_.feller_alpha(), eve_.feller_beta(), h, g);
  mutant = feller_step(mutant, mutant_.feller_alpha(), mutant_.feller_beta(), h, g);
  jump_flow(eve, mutant, half, g);
  mutant += alpha_imm_ * eve * half;
}

auto simulate_path(const Forward_stepper& stepper, double y0, double horizon, double delta,
                   Philox& g) -> Path {
  require_step(delta, horizon);
  if (!(y0 >= 0.0)) throw Domain_error("simulate_path: y0 must be >= 0");
  auto path = Path{0.0, delta, {}, never};
  auto n = grid_nodes(horizon, delta);
  auto y = y0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) y = stepper.step(y, delta, g);
    path.values.push_back(y);
    if (y == 0.0) {
      path.extinction_time = path.time(i);
      break;
    }
  }
  return path;
}

auto simulate_path(const Mechanism& mech, double y0, double horizon, double delta, Philox& g)
    -> Path {
  return simulate_path(Forward_stepper{mech}, y0, horizon, delta, g);
}

auto simulate_pair(const Pair_stepper& stepper, double x, double horizon, double delta, Philox& g)
    -> Pair_path {
  require_step(delta, horizon);
  if (!(x >= 0.0)) throw Domain_error("simulate_pair: x must be >= 0");
  auto out = Pair_path{{0.0, delta, {}, never}, {0.0, delta, {}, never}};
  auto n = grid_nodes(horizon, delta);
  auto eve = x;
  auto mutant = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) stepper.step(eve, mutant, delta, g);
    auto total = eve + mutant;
    if (out.eve.extinction_time == never) {
      out.eve.values.push_back(eve);
      if (eve == 0.0) out.eve.extinction_time = out.eve.time(i);
    }
    out.total.values.push_back(total);
    if (total == 0.0) {
      out.total.extinction_time = out.total.time(i);
      break;
    }
  }
  return out;
}

auto simulate_pair(const Mutation_split& split, double x, double horizon, double delta, Philox& g)
    -> Pair_path {
  return simulate_pair(Pair_stepper{split}, x, horizon, delta, g);
}

auto pair_extinction_times(const Pair_stepper& stepper, double x, double delta, double max_time,
                           Philox& g) -> Pair_extinction {
  require_step(delta, max_time);
  auto out = Pair_extinction{};
  auto eve = x;
  auto mutant = 0.0;
  if (x == 0.0) return {0.0, 0.0};
  auto n = grid_nodes(max_time, delta);
  for (std::size_t i = 1; i < n; ++i) {
    stepper.step(eve, mutant, delta, g);
    auto t = static_cast<double>(i) * delta;
    if (eve == 0.0 && out.eve == never) out.eve = t;
    if (eve + mutant == 0.0) {
      out.total = t;
      break;
    }
  }
  return out;
}

// ---- entrance law --------------------------------------------------------

namespace {

// Gaver-Stehfest weights V_k, k = 1..n (n even).
auto stehfest_weights(int n) -> std::vector<long double> {
  auto fact = [](int k) {
    auto f = 1.0L;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
  };
  auto half = n / 2;
  auto v = std::vector<long double>(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) {
    auto s = 0.0L;
    for (int j = (k + 1) / 2; j <= std::min(k, half); ++j) {
      s += std::pow(static_cast<long double>(j), half) * fact(2 * j) /
           (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k));
    }
    v[static_cast<std::size_t>(k - 1)] = ((k + half) % 2 == 0 ? 1.0L : -1.0L) * s;
  }
  return v;
}

}  // namespace

Entrance_sampler::Entrance_sampler(const Extinction_kernel& k, double eps) : eps_{eps} {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw Domain_error("entrance law: eps must be > 0");
  const auto& mech = k.mechanism();
  auto a = mech.alpha0();
  auto c = k.c_direct(eps);
  // N[Y_eps] = e^{-a eps}; N[Y_eps^2] = psi''(0) e^{-a eps} (1 - e^{-a eps}) / a.
  mean_ = std::exp(-a * eps) / c;
  auto curvature = 2.0 * mech.beta() + mech.pi().second_moment();
  auto spread = a > 0.0 ? -std::expm1(-a * eps) / a : eps;
  second_moment_ = curvature * std::exp(-a * eps) * spread / c;
  if (mech.is_quadratic()) {
    method_ = Method::exponential;
    return;
  }
  build_table(k);
}

void Entrance_sampler::build_table(const Extinction_kernel& k) {
  constexpr int terms = 14;
  static const auto weights = stehfest_weights(terms);
  auto c = k.c_direct(eps_);
  auto ln2 = std::log(2.0L);
  auto cdf_at = [&](double x) {
    auto sum = 0.0L;
    for (int j = 1; j <= terms; ++j) {
      auto s = static_cast<double>(j * ln2 / x);
      // Laplace transform of the distribution function: (1 - u(s, eps)/c) / s.
      auto lt = (1.0L - static_cast<long double>(k.u(s, eps_)) / c) / s;
      sum += weights[static_cast<std::size_t>(j - 1)] * lt;
    }
    return static_cast<double>(ln2 / x * sum);
  };
  constexpr int per_decade = 40;
  auto step = std::pow(10.0, 1.0 / per_decade);
  auto x = mean_ * 1e-4;
  auto x_stop = mean_ * 1e6;
  auto ok = true;
  while (x <= x_stop) {
    auto f = std::clamp(cdf_at(x), 0.0, 1.0);
    if (!fs_.empty() && f < fs_.back()) {
      // Small non-monotone wiggles are inversion noise; large ones are not.
      if (fs_.back() - f > 1e-4) ok = false;
      f = fs_.back();
    }
    xs_.push_back(x);
    fs_.push_back(f);
    if (f > 1.0 - 1e-9) break;
    x *= step;
  }
  // Check the tabulated law against the exact mean.
  auto m = xs_.front() * fs_.front() * 0.5;
  for (std::size_t i = 1; i < xs_.size(); ++i) {
    m += (fs_[i] - fs_[i - 1]) * 0.5 * (xs_[i] + xs_[i - 1]);
  }
  auto tail = 1.0 - fs_.back();
  ok = ok && tail < 1e-5 && std::abs(m / mean_ - 1.0) < 2e-3;
  if (ok) {
    fs_.back() = 1.0;
    method_ = Method::table;
  } else {
    method_ = Method::gamma_fallback;
    xs_.clear();
    fs_.clear();
  }
}

auto Entrance_sampler::sample(Philox& g) const -> double {
  switch (method_) {
    case Method::exponential:
      return draw::exponential(mean_, g);
    case Method::table: {
      auto u = g.uniform();
      auto it = std::lower_bound(fs_.begin(), fs_.end(), u);
      auto i = static_cast<std::size_t>(it - fs_.begin());
      if (i == 0) return xs_[0] * u / fs_[0];
      if (i >= fs_.size()) return xs_.back();
      auto w = (u - fs_[i - 1]) / (fs_[i] - fs_[i - 1]);
      return xs_[i - 1] + w * (xs_[i] - xs_[i - 1]);
    }
    case Method::gamma_fallback: {
      auto var = second_moment_ - mean_ * mean_;
      auto shape = mean_ * mean_ / var;
      return draw::gamma(shape, mean_ / shape, g);
    }
  }
  return 0.0;
}

auto Entrance_sampler::cdf(double x) const -> double {
  if (x <= 0.0) return 0.0;
  switch (method_) {
    case Method::exponential:
      return -std::expm1(-x / mean_);
    case Method::table: {
      auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
      auto i = static_cast<std::size_t>(it - xs_.begin());
      if (i == 0) return fs_[0] * x / xs_[0];
      if (i >= xs_.size()) return 1.0;
      auto w = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
      return fs_[i - 1] + w * (fs_[i] - fs_[i - 1]);
    }
    case Method::gamma_fallback:
      throw Unsupported_error("entrance law: no distribution function for the Gamma fallback");
  }
  return 0.0;
}

auto entrance_sample(const Extinction_kernel& k, double eps, Philox& g) -> double {
  return Entrance_sampler{k, eps}.sample(g);
}

// ---- excursions -----------------------------------------------------------

Excursion_sampler::Excursion_sampler(const Extinction_kernel& k, const Mutation_split& split,
                                     double eps, Forward_options opt)
    : k_{&k},
      entrance_{k, eps},
      single_{split.total(), opt},
      pair_{split, opt},
      c_eps_{k.c(eps)} {
  const auto& a = k.mechanism();
  const auto& b = split.total();
  if (!(a.alpha0() == b.alpha0() && a.beta() == b.beta() && a.pi() == b.pi())) {
    throw Domain_error("excursion sampler: kernel and split describe different mechanisms");
  }
}

auto Excursion_sampler::acceptance(double h) const -> double {
  if (!(h > eps())) return 0.0;
  return (c_eps_ - k_->c(h)) / c_eps_;
}

auto Excursion_sampler::sample(const Excursion_spec& spec, Philox& g) const
    -> std::optional<Excursion> {
  auto delta = spec.delta;
  if (!(delta > 0.0)) throw Domain_error("excursion: grid step must be > 0");
  auto eps = entrance_.eps();
  auto cap = spec.cap;
  if (!(cap > spec.birth + eps)) return std::nullopt;
  auto stop = std::min(spec.observe_until, cap);
  auto enter = spec.birth + eps;

  auto out = Excursion{};
  auto y = entrance_.sample(g);
  out.entrance_value = y;
  auto eve = spec.pair ? y : 0.0;
  auto mutant = spec.pair ? 0.0 : y;

  auto first = static_cast<long>(std::ceil(spec.birth / delta - 1e-9));
  out.total.t0 = static_cast<double>(first) * delta;
  out.total.delta = delta;
  if (spec.pair) out.eve = Path{out.total.t0, delta, {}, never};
  auto record = [&](double total, double e) {
    auto i = out.total.values.size();
    if (out.total.extinction_time == never) {
      out.total.values.push_back(total);
      if (total == 0.0) out.total.extinction_time = out.total.time(i);
    }
    if (spec.pair && out.eve.extinction_time == never) {
      auto j = out.eve.values.size();
      out.eve.values.push_back(e);
      if (e == 0.0) out.eve.extinction_time = out.eve.time(j);
    }
  };

  // Nodes before the entrance time: ramp from 0 at birth.
  auto node = first;
  for (; static_cast<double>(node) * delta < enter && static_cast<double>(node) * delta <= stop;
       ++node) {
    auto w = (static_cast<double>(node) * delta - spec.birth) / eps;
    record(w * y, spec.pair ? w * y : 0.0);
  }

  // Forward from the entrance, landing on grid nodes up to `stop`.
  auto t = enter;
  auto advance = [&](double h) {
    if (!(h > 0.0)) return;
    if (spec.pair) {
      pair_.step(eve, mutant, h, g);
    } else {
      mutant = single_.step(mutant, h, g);
    }
    ++out.steps;
  };
  while (eve + mutant > 0.0) {
    auto next = static_cast<double>(node) * delta;
    if (next > stop) break;
    advance(next - t);
    t = next;
    record(eve + mutant, eve);
    ++node;
  }
  if (eve + mutant > 0.0 && t < stop) {
    advance(stop - t);
    t = stop;
  }
  auto alive = eve + mutant;
  if (alive > 0.0) {
    if (!(t < cap)) return std::nullopt;
    // P(tau <= cap | Y_t = y) = exp(-y c(cap - t)).
    if (!draw::bernoulli(std::exp(-alive * k_->c(cap - t)), g)) return std::nullopt;
  } else if (out.total.extinction_time == never) {
    // Died between the last node and `stop`: next node reads 0.
    record(0.0, 0.0);
  }
  return out;
}

auto sample_excursion(const Excursion_sampler& s, double h, double delta, Philox& g)
    -> std::optional<Path> {
  if (!(h > s.eps())) throw Domain_error("sample_excursion: lifetime cap must exceed eps");
  auto a = s.acceptance(h);
  if (a < 1e-6) {
    auto os = std::ostringstream{};
    os << "sample_excursion: acceptance " << a << " below 1e-6 (eps " << s.eps() << ", cap " << h
       << ")";
    throw Config_error(os.str());
  }
  auto spec = Excursion_spec{0.0, h, h, delta, false};
  auto e = s.sample(spec, g);
  if (!e) return std::nullopt;
  return std::move(e->total);
}

}  // namespace csbp
