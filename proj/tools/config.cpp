#include "config.h"

#include <cstdio>
#include <fstream>
#include <set>

#include "csbp/errors.h"

namespace csbp::cli {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw Config_error(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw Config_error(where + ": unknown key '" + key + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Config_error(where + "." + key + ": " + e.what());
  }
}

auto parse_atoms(const json& j, const std::string& where) -> std::vector<Atom> {
  if (!j.is_array()) throw Config_error(where + ": expected a list of atoms");
  auto out = std::vector<Atom>{};
  for (const auto& a : j) {
    if (a.is_array() && a.size() == 2 && a[0].is_number() && a[1].is_number()) {
      out.push_back({a[0].get<double>(), a[1].get<double>()});
    } else if (a.is_object()) {
      reject_unknown(a, {"location", "mass"}, where);
      if (!a.contains("location") || !a.contains("mass")) {
        throw Config_error(where + ": atoms need location and mass");
      }
      auto atom = Atom{};
      read(a, "location", atom.location, where);
      read(a, "mass", atom.mass, where);
      out.push_back(atom);
    } else {
      throw Config_error(where + ": atoms are [location, mass] or {location, mass}");
    }
  }
  return out;
}

auto parse_measure(const json& j, const std::string& where) -> Levy_measure {
  if (j.is_array()) return Levy_measure::atoms(parse_atoms(j, where));
  reject_unknown(j, {"kind", "atoms", "gamma"}, where);
  auto kind = std::string{"zero"};
  read(j, "kind", kind, where);
  if (kind == "zero") return Levy_measure::zero();
  if (kind == "atoms") {
    if (!j.contains("atoms")) throw Config_error(where + ": kind atoms needs 'atoms'");
    return Levy_measure::atoms(parse_atoms(j.at("atoms"), where + ".atoms"));
  }
  if (kind == "power_law") {
    if (!j.contains("gamma")) throw Config_error(where + ": kind power_law needs 'gamma'");
    auto g = 0.0;
    read(j, "gamma", g, where);
    return Levy_measure::power_law(g);
  }
  throw Config_error(where + ": unknown kind '" + kind + "'");
}

auto measure_json(const Levy_measure& m) -> json {
  switch (m.kind()) {
    case Levy_measure::Kind::zero:
      return {{"kind", "zero"}};
    case Levy_measure::Kind::atoms: {
      auto atoms = json::array();
      for (auto a : m.atom_list()) atoms.push_back({a.location, a.mass});
      return {{"kind", "atoms"}, {"atoms", atoms}};
    }
    case Levy_measure::Kind::power_law:
      return {{"kind", "power_law"}, {"gamma", m.gamma()}};
  }
  return {};
}

auto optional_number(const std::optional<double>& x) -> json {
  return x ? json(*x) : json(nullptr);
}

}  // namespace

auto Run_config::split_params() const -> Split_params {
  if (theta) return shifted_split(mechanism, *theta);
  return Split_params{mechanism, nu, alpha_imm};
}

auto parse_config(const json& j) -> Run_config {
  auto c = Run_config{};
  reject_unknown(j, {"mechanism", "split", "numeric", "mc", "run", "functional", "output_dir"},
                 "config");
  if (j.contains("mechanism")) {
    const auto& m = j.at("mechanism");
    reject_unknown(m, {"alpha0", "beta", "pi"}, "mechanism");
    read(m, "alpha0", c.mechanism.alpha0, "mechanism");
    read(m, "beta", c.mechanism.beta, "mechanism");
    if (m.contains("pi")) c.mechanism.pi = parse_measure(m.at("pi"), "mechanism.pi");
  }
  if (j.contains("split")) {
    const auto& s = j.at("split");
    reject_unknown(s, {"nu", "alpha_imm", "theta"}, "split");
    if (s.contains("theta") && (s.contains("nu") || s.contains("alpha_imm"))) {
      throw Config_error("split: give either theta or (nu, alpha_imm), not both");
    }
    if (s.contains("nu")) c.nu = parse_measure(s.at("nu"), "split.nu");
    read(s, "alpha_imm", c.alpha_imm, "split");
    if (s.contains("theta")) {
      auto t = 0.0;
      read(s, "theta", t, "split");
      c.theta = t;
    }
  }
  if (j.contains("numeric")) {
    const auto& n = j.at("numeric");
    reject_unknown(n,
                   {"delta", "eps", "quad_tol", "max_step", "guard", "small_jump_variance", "t_min",
                    "t_max", "points", "lambda"},
                   "numeric");
    read(n, "delta", c.delta, "numeric");
    read(n, "eps", c.eps, "numeric");
    read(n, "quad_tol", c.quad_tol, "numeric");
    read(n, "max_step", c.max_step, "numeric");
    read(n, "guard", c.guard, "numeric");
    read(n, "small_jump_variance", c.small_jump_variance, "numeric");
    read(n, "t_min", c.t_min, "numeric");
    read(n, "t_max", c.t_max, "numeric");
    read(n, "points", c.points, "numeric");
    read(n, "lambda", c.lambda, "numeric");
  }
  if (j.contains("mc")) {
    const auto& m = j.at("mc");
    reject_unknown(m,
                   {"n", "seed", "m_window", "bin_width", "max_time", "min_events", "threads",
                    "scale"},
                   "mc");
    read(m, "n", c.n, "mc");
    read(m, "seed", c.seed, "mc");
    if (m.contains("m_window")) {
      const auto& w = m.at("m_window");
      if (!w.is_array() || w.size() != 2) throw Config_error("mc.m_window: expected [lo, hi]");
      c.m_lo = w[0].get<double>();
      c.m_hi = w[1].get<double>();
    }
    read(m, "bin_width", c.bin_width, "mc");
    read(m, "max_time", c.max_time, "mc");
    read(m, "min_events", c.min_events, "mc");
    read(m, "threads", c.threads, "mc");
    read(m, "scale", c.scale, "mc");
  }
  if (j.contains("run")) {
    const auto& r = j.at("run");
    reject_unknown(r, {"m", "x", "horizon"}, "run");
    if (r.contains("m") && !r.at("m").is_null()) {
      auto m = 0.0;
      read(r, "m", m, "run");
      c.m = m;
    }
    read(r, "x", c.x, "run");
    read(r, "horizon", c.horizon, "run");
  }
  if (j.contains("functional")) {
    const auto& f = j.at("functional");
    reject_unknown(f, {"times", "mu_eve", "mu_total"}, "functional");
    auto tf = Test_functional{};
    read(f, "times", tf.times, "functional");
    read(f, "mu_eve", tf.mu_eve, "functional");
    read(f, "mu_total", tf.mu_total, "functional");
    if (tf.mu_eve.empty()) tf.mu_eve.assign(tf.times.size(), 0.0);
    if (tf.mu_total.empty()) tf.mu_total.assign(tf.times.size(), 0.0);
    try {
      tf.check();
    } catch (const std::exception& e) {
      throw Config_error(std::string("functional: ") + e.what());
    }
    c.functional = std::move(tf);
  }
  read(j, "output_dir", c.output_dir, "config");
  return c;
}

auto load_config(const std::string& path) -> Run_config {
  auto in = std::ifstream{path};
  if (!in) throw Config_error("cannot open config file " + path);
  auto j = json{};
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw Config_error("config " + path + ": " + e.what());
  }
  return parse_config(j);
}

auto to_json(const Run_config& c) -> json {
  auto j = json{};
  j["mechanism"] = {{"alpha0", c.mechanism.alpha0},
                    {"beta", c.mechanism.beta},
                    {"pi", measure_json(c.mechanism.pi)}};
  if (c.theta) {
    j["split"] = {{"theta", *c.theta}};
  } else {
    j["split"] = {{"nu", measure_json(c.nu)}, {"alpha_imm", c.alpha_imm}};
  }
  j["numeric"] = {{"delta", c.delta},       {"eps", c.eps},
                  {"quad_tol", c.quad_tol}, {"max_step", c.max_step},
                  {"guard", c.guard},       {"small_jump_variance", c.small_jump_variance},
                  {"t_min", c.t_min},       {"t_max", c.t_max},
                  {"points", c.points},     {"lambda", c.lambda}};
  j["mc"] = {{"n", c.n},
             {"seed", c.seed},
             {"m_window", {c.m_lo, c.m_hi}},
             {"bin_width", c.bin_width},
             {"max_time", c.max_time},
             {"min_events", c.min_events},
             {"scale", c.scale}};
  j["run"] = {{"m", optional_number(c.m)}, {"x", c.x}, {"horizon", c.horizon}};
  j["functional"] = {{"times", c.functional.times},
                     {"mu_eve", c.functional.mu_eve},
                     {"mu_total", c.functional.mu_total}};
  return j;
}

auto config_hash(const Run_config& c) -> std::string {
  auto text = to_json(c).dump();
  auto h = std::uint64_t{0xcbf29ce484222325ull};
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace csbp::cli
