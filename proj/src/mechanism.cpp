#include "csbp/mechanism.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "csbp/errors.h"

namespace csbp {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

// e^{-x} - 1 + x without cancellation for small x.
auto compensated_exp(double x) -> double {
  if (x < 1e-3) {
    return x * x * (0.5 - x * (1.0 / 6.0 - x * (1.0 / 24.0 - x / 120.0)));
  }
  return std::expm1(-x) + x;
}

void require_nonnegative(double lambda, const char* what) {
  if (!(lambda >= 0.0)) {
    throw Domain_error(std::string(what) + ": lambda must be >= 0, got " + std::to_string(lambda));
  }
}

auto same_location(double a, double b) -> bool {
  return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
}

// pi - nu for atomic measures; masses below rounding noise are dropped.
auto subtract_atoms(const Levy_measure& pi, const Levy_measure& nu) -> Levy_measure {
  if (nu.is_zero()) return pi;
  auto out = std::vector<Atom>{};
  for (auto a : pi.atom_list()) {
    auto removed = 0.0;
    for (auto b : nu.atom_list()) {
      if (same_location(a.location, b.location)) removed += b.mass;
    }
    auto rest = a.mass - removed;
    if (rest > 1e-14 * a.mass) out.push_back({a.location, rest});
  }
  if (out.empty()) return Levy_measure::zero();
  return Levy_measure::atoms(std::move(out));
}

}  // namespace

auto Levy_measure::atoms(std::vector<Atom> atoms) -> Levy_measure {
  auto m = Levy_measure{};
  if (atoms.empty()) return m;
  m.kind_ = Kind::atoms;
  m.atoms_ = std::move(atoms);
  return m;
}

auto Levy_measure::power_law(double gamma) -> Levy_measure {
  auto m = Levy_measure{};
  m.kind_ = Kind::power_law;
  m.gamma_ = gamma;
  if (gamma > 1.0 && gamma < 2.0) {
    m.scale_ = gamma * (gamma - 1.0) / std::tgamma(2.0 - gamma);
  }
  return m;
}

auto Levy_measure::issues() const -> std::vector<std::string> {
  auto out = std::vector<std::string>{};
  switch (kind_) {
    case Kind::zero:
      break;
    case Kind::atoms:
      for (auto i = std::size_t{0}; i < atoms_.size(); ++i) {
        if (!(atoms_[i].location > 0.0) || !std::isfinite(atoms_[i].location)) {
          out.push_back("atom " + std::to_string(i) + ": location must be finite and > 0");
        }
        if (!(atoms_[i].mass > 0.0) || !std::isfinite(atoms_[i].mass)) {
          out.push_back("atom " + std::to_string(i) + ": mass must be finite and > 0");
        }
      }
      break;
    case Kind::power_law:
      if (!(gamma_ > 1.0 && gamma_ < 2.0)) {
        out.push_back("power-law index must lie in (1,2), got " + std::to_string(gamma_));
      }
      break;
  }
  return out;
}

auto Levy_measure::compensated_laplace(double lambda) const -> double {
  switch (kind_) {
    case Kind::zero:
      return 0.0;
    case Kind::atoms: {
      auto s = 0.0;
      for (auto a : atoms_) s += a.mass * compensated_exp(lambda * a.location);
      return s;
    }
    case Kind::power_law:
      return std::pow(lambda, gamma_);
  }
  return 0.0;
}

auto Levy_measure::compensated_laplace_prime(double lambda) const -> double {
  switch (kind_) {
    case Kind::zero:
      return 0.0;
    case Kind::atoms: {
      auto s = 0.0;
      for (auto a : atoms_) s += -a.mass * a.location * std::expm1(-lambda * a.location);
      return s;
    }
    case Kind::power_law:
      return gamma_ * std::pow(lambda, gamma_ - 1.0);
  }
  return 0.0;
}

auto Levy_measure::compensated_laplace_second(double lambda) const -> double {
  switch (kind_) {
    case Kind::zero:
      return 0.0;
    case Kind::atoms: {
      auto s = 0.0;
      for (auto a : atoms_) s += a.mass * a.location * a.location * std::exp(-lambda * a.location);
      return s;
    }
    case Kind::power_law:
      return gamma_ * (gamma_ - 1.0) * std::pow(lambda, gamma_ - 2.0);
  }
  return 0.0;
}

auto Levy_measure::laplace_increment(double lambda) const -> double {
  switch (kind_) {
    case Kind::zero:
      return 0.0;
    case Kind::atoms: {
      auto s = 0.0;
      for (auto a : atoms_) s += -a.mass * std::expm1(-lambda * a.location);
      return s;
    }
    case Kind::power_law:
      return lambda > 0.0 ? inf : 0.0;
  }
  return 0.0;
}

auto Levy_measure::tilted_first_moment(double x) const -> double {
  switch (kind_) {
    case Kind::zero:
      return 0.0;
    case Kind::atoms: {
      auto s = 0.0;
      for (auto a : atoms_) s += a.mass * a.location * std::exp(-x * a.location);
      return s;
    }
    case Kind::power_law:
      return inf;
  }
  return 0.0;
}

auto Levy_measure::total_mass() const -> double {
  if (kind_ == Kind::power_law) return inf;
  auto s = 0.0;
  for (auto a : atoms_) s += a.mass;
  return s;
}

auto Levy_measure::first_moment() const -> double {
  if (kind_ == Kind::power_law) return inf;
  auto s = 0.0;
  for (auto a : atoms_) s += a.mass * a.location;
  return s;
}

auto Levy_measure::second_moment() const -> double {
  if (kind_ == Kind::power_law) return inf;
  auto s = 0.0;
  for (auto a : atoms_) s += a.mass * a.location * a.location;
  return s;
}

auto Validation_report::summary() const -> std::string {
  if (ok()) return "valid";
  auto os = std::ostringstream{};
  os << "invalid:";
  for (const auto& f : failures) os << "\n  - " << f;
  return os.str();
}

auto validate(const Mechanism_params& p) -> Validation_report {
  auto r = Validation_report{};
  if (!(p.alpha0 >= 0.0) || !std::isfinite(p.alpha0)) {
    r.failures.push_back("alpha0 must be finite and >= 0 (sub-critical or critical)");
  }
  if (!(p.beta >= 0.0) || !std::isfinite(p.beta)) {
    r.failures.push_back("beta must be finite and >= 0");
  }
  for (auto& s : p.pi.issues()) r.failures.push_back("pi: " + s);
  // Atoms alone have finite variation and 1/psi is not integrable at
  // infinity (psi grows linearly); a power law grows like lambda^gamma.
  auto infinite_variation = p.beta > 0.0 || p.pi.kind() == Levy_measure::Kind::power_law;
  if (!infinite_variation) {
    r.failures.push_back("finite variation: need beta > 0 or a power-law pi");
    r.failures.push_back("Grey condition fails: int^inf dv/psi(v) diverges");
  }
  return r;
}

Mechanism::Mechanism(Mechanism_params params) : p_{std::move(params)} {
  auto report = validate(p_);
  if (!report.ok()) throw Validation_error("mechanism " + report.summary());
}

auto Mechanism::psi(double lambda) const -> double {
  require_nonnegative(lambda, "psi");
  if (std::isinf(lambda)) return inf;
  return p_.alpha0 * lambda + p_.beta * lambda * lambda + p_.pi.compensated_laplace(lambda);
}

auto Mechanism::psi_prime(double lambda) const -> double {
  require_nonnegative(lambda, "psi_prime");
  return p_.alpha0 + 2.0 * p_.beta * lambda + p_.pi.compensated_laplace_prime(lambda);
}

auto Mechanism::psi_second(double lambda) const -> double {
  require_nonnegative(lambda, "psi_second");
  return 2.0 * p_.beta + p_.pi.compensated_laplace_second(lambda);
}

auto validate(const Split_params& p) -> Validation_report {
  auto r = validate(p.total);
  if (!(p.alpha_imm >= 0.0) || !std::isfinite(p.alpha_imm)) {
    r.failures.push_back("alpha_imm must be finite and >= 0");
  }
  for (auto& s : p.nu.issues()) r.failures.push_back("nu: " + s);
  switch (p.nu.kind()) {
    case Levy_measure::Kind::zero:
      break;
    case Levy_measure::Kind::power_law:
      r.failures.push_back("nu: power-law mutation measures are not supported");
      break;
    case Levy_measure::Kind::atoms:
      if (p.total.pi.kind() != Levy_measure::Kind::atoms) {
        r.failures.push_back("nu: atomic nu requires an atomic pi (pi_eve = pi - nu must be >= 0)");
        break;
      }
      for (auto b : p.nu.atom_list()) {
        auto available = 0.0;
        for (auto a : p.total.pi.atom_list()) {
          if (same_location(a.location, b.location)) available += a.mass;
        }
        auto used = 0.0;
        for (auto c : p.nu.atom_list()) {
          if (same_location(c.location, b.location)) used += c.mass;
        }
        if (available == 0.0) {
          r.failures.push_back("nu: atom at " + std::to_string(b.location) + " is not an atom of pi");
        } else if (used > available * (1.0 + 1e-12)) {
          r.failures.push_back("nu: mass at " + std::to_string(b.location) + " exceeds pi mass");
        }
      }
      break;
  }
  return r;
}

Mutation_split::Mutation_split(Split_params params)
    : total_{[&] {
        auto report = validate(params);
        if (!report.ok()) throw Validation_error("split " + report.summary());
        return Mechanism{params.total};
      }()},
      nu_{std::move(params.nu)},
      alpha_imm_{params.alpha_imm},
      eve_{Mechanism_params{total_.alpha0() + alpha_imm_ + nu_.first_moment(), total_.beta(),
                            subtract_atoms(total_.pi(), nu_)}} {}

auto Mutation_split::phi(double lambda) const -> double {
  require_nonnegative(lambda, "phi");
  return alpha_imm_ * lambda + nu_.laplace_increment(lambda);
}

auto Mutation_split::phi_prime(double lambda) const -> double {
  require_nonnegative(lambda, "phi_prime");
  return alpha_imm_ + nu_.tilted_first_moment(lambda);
}

auto shifted_split(const Mechanism_params& mech, double theta) -> Split_params {
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw Domain_error("shifted_split: theta must be finite and > 0");
  }
  if (mech.pi.kind() == Levy_measure::Kind::power_law) {
    throw Unsupported_error(
        "shifted_split: the exponential tilt of a power-law measure is not a supported Levy measure");
  }
  auto nu = std::vector<Atom>{};
  for (auto a : mech.pi.atom_list()) {
    nu.push_back({a.location, -a.mass * std::expm1(-theta * a.location)});
  }
  // psi(theta + l) - psi(theta) has linear coefficient psi'(theta), of which
  // alpha0 + int ell nu is accounted for; the remainder is 2 beta theta.
  return Split_params{mech, Levy_measure::atoms(std::move(nu)), 2.0 * mech.beta * theta};
}

}  // namespace csbp
