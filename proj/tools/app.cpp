#include "app.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "config.h"
#include "csbp/errors.h"
#include "csbp/forward.h"
#include "csbp/kernel.h"
#include "csbp/laplace.h"
#include "csbp/spine.h"
#include "csbp/verify.h"
#include "csbp/williams.h"

namespace csbp::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double inf = std::numeric_limits<double>::infinity();

struct Overrides {
  std::optional<std::string> config;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::size_t> n;
  std::optional<double> delta;
  std::optional<double> eps;
  std::optional<double> m;
  std::optional<double> x;
  std::optional<double> horizon;
  std::optional<double> lambda;
  std::optional<double> scale;
  std::vector<std::string> only;
};

auto effective_config(const Overrides& o) -> Run_config {
  auto c = o.config ? load_config(*o.config) : Run_config{};
  if (const char* env = std::getenv(seed_env); env != nullptr && *env != '\0') {
    auto text = std::string{env};
    auto value = std::uint64_t{};
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || p != text.data() + text.size()) {
      throw Config_error(std::string(seed_env) + " is not an unsigned integer: " + text);
    }
    c.seed = value;
  }
  if (o.output_dir) c.output_dir = *o.output_dir;
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  if (o.n) c.n = *o.n;
  if (o.delta) c.delta = *o.delta;
  if (o.eps) c.eps = *o.eps;
  if (o.m) c.m = *o.m;
  if (o.x) c.x = *o.x;
  if (o.horizon) c.horizon = *o.horizon;
  if (o.lambda) c.lambda = *o.lambda;
  if (o.scale) c.scale = *o.scale;
  return c;
}

// ---- output ----

class Writer {
 public:
  explicit Writer(const Run_config& c) : c_{c}, dir_{c.output_dir}, hash_{config_hash(c)} {
    fs::create_directories(dir_);
  }

  auto csv(const std::string& name, const std::vector<std::string>& header) -> std::ofstream {
    auto f = open(name);
    for (std::size_t i = 0; i < header.size(); ++i) f << (i ? "," : "") << header[i];
    f << '\n';
    return f;
  }

  // Embeds {config_hash, seed, version}.
  auto json_report(const std::string& name, json j) -> json {
    j["config_hash"] = hash_;
    j["seed"] = c_.seed;
    j["version"] = version;
    open(name) << j.dump(2) << '\n';
    return j;
  }

 private:
  auto open(const std::string& name) -> std::ofstream {
    auto path = dir_ / name;
    auto f = std::ofstream{path, std::ios::binary};
    if (!f) throw Config_error("cannot write " + path.string());
    return f;
  }

  const Run_config& c_;
  fs::path dir_;
  std::string hash_;
};

void row(std::ostream& os, std::initializer_list<double> xs) {
  auto first = true;
  for (auto x : xs) {
    os << (first ? "" : ",") << format_number(x);
    first = false;
  }
  os << '\n';
}

auto number_or_null(double x) -> json { return std::isfinite(x) ? json(x) : json(nullptr); }

auto make_split(const Run_config& c) -> Mutation_split { return Mutation_split{c.split_params()}; }

auto make_kernel(const Run_config& c, const Mechanism& mech) -> Extinction_kernel {
  auto opt = Kernel_options{};
  opt.quad_tol = c.quad_tol;
  return Extinction_kernel{mech, opt};
}

auto forward_options(const Run_config& c) -> Forward_options {
  auto f = Forward_options{};
  f.small_jump_variance = c.small_jump_variance;
  return f;
}

auto williams_options(const Run_config& c) -> Williams_options {
  auto w = Williams_options{};
  w.eps = c.eps;
  w.delta = c.delta;
  w.forward = forward_options(c);
  return w;
}

auto horizon_of(const Run_config& c, const Extinction_kernel& k, const Replica_streams& rs)
    -> double {
  if (c.m) return *c.m;
  auto g = rs.stream(Stream_role::horizon);
  return sample_m(k, c.m_lo > 0.0 ? c.m_lo : c.eps, c.m_hi, g);
}

void write_spine(Writer& w, const std::string& name, const Spine_measure& s) {
  auto f = w.csv(name, {"t", "ell", "z", "v"});
  for (const auto& a : s.atoms) {
    f << format_number(a.t) << ',' << format_number(a.ell) << ',' << a.z << ','
      << (a.v ? format_number(*a.v) : "") << '\n';
  }
}

auto clock_json(const Mutation_clock& k) -> json {
  return {{"t0", number_or_null(k.t0)},
          {"t1", number_or_null(k.t1)},
          {"t2", number_or_null(k.t2)},
          {"simultaneous", k.simultaneous()}};
}

// ---- commands ----

auto mechanism_validate(const Run_config& c, std::ostream& out) -> int {
  auto w = Writer{c};
  auto report = Validation_report{};
  try {
    report = validate(c.split_params());
  } catch (const Unsupported_error& e) {
    report.failures.push_back(e.what());
  }
  out << report.summary() << '\n';
  w.json_report("mechanism_validate.json",
                {{"valid", report.ok()}, {"failures", report.failures}});
  return report.ok() ? exit_ok : exit_validation;
}

auto kernel_table(const Run_config& c, std::ostream& out) -> int {
  if (!(c.t_min > 0.0 && c.t_max > c.t_min) || c.points < 2) {
    throw Domain_error("kernel table: need 0 < t_min < t_max and points >= 2");
  }
  auto k = make_kernel(c, Mechanism{c.mechanism});
  auto w = Writer{c};
  auto f = w.csv("kernel_table.csv", {"t", "c", "c_density", "u"});
  for (int i = 0; i < c.points; ++i) {
    auto t = c.t_min * std::pow(c.t_max / c.t_min, i / (c.points - 1.0));
    row(f, {t, k.c(t), k.c_density(t), k.u(c.lambda, t)});
  }
  auto j = w.json_report("kernel_table.json", {{"closed_form", k.closed_form()},
                                               {"memo_error", k.memo_error()},
                                               {"points", c.points},
                                               {"lambda", c.lambda}});
  out << j.dump() << '\n';
  return exit_ok;
}

auto extinction_prob(const Run_config& c, std::ostream& out) -> int {
  if (!c.m) throw Config_error("extinction-prob: --m is required");
  auto split = make_split(c);
  auto k = make_kernel(c, split.total());
  auto w = Writer{c};
  auto j = w.json_report("extinction_prob.json",
                         {{"m", *c.m},
                          {"p", simultaneous_extinction_prob(k, split, *c.m)},
                          {"phi_c_integral", phi_c_integral(k, split, *c.m)}});
  out << j.dump() << '\n';
  return exit_ok;
}

auto spine_sample(const Run_config& c, std::ostream& out) -> int {
  auto split = make_split(c);
  auto k = make_kernel(c, split.total());
  auto rs = Replica_streams{c.seed, 0};
  auto m = horizon_of(c, k, rs);
  auto gs = rs.stream(Stream_role::spine);
  auto spine = sample_spine(split, k, m, gs);
  auto gc = rs.stream(Stream_role::clock);
  auto clock = sample_t0(split, spine, gc);
  auto w = Writer{c};
  write_spine(w, "spine.csv", spine);
  auto j = w.json_report("spine.json", {{"m", m},
                                        {"count", spine.count()},
                                        {"atom_mass", spine.atom_mass()},
                                        {"drift", spine.drift},
                                        {"small_atom_cutoff", spine.small_atom_cutoff},
                                        {"clock", clock_json(clock)}});
  out << j.dump() << '\n';
  return exit_ok;
}

auto williams_sample(const Run_config& c, std::ostream& out) -> int {
  auto split = make_split(c);
  auto k = make_kernel(c, split.total());
  auto d = Decomposer{split, k, williams_options(c)};
  auto rs = Replica_streams{c.seed, 0};
  auto m = horizon_of(c, k, rs);
  auto s = d.assemble(m, rs, {never, true});
  auto w = Writer{c};
  write_spine(w, "spine.csv", s.spine);
  {
    auto f = w.csv("grafts.csv", {"graft_id", "t_graft", "eve", "extinction_time"});
    for (std::size_t i = 0; i < s.grafts.size(); ++i) {
      const auto& g = s.grafts[i];
      f << i << ',' << format_number(g.t_graft) << ',' << (g.eve_typed ? 1 : 0) << ','
        << format_number(g.total.extinction_time) << '\n';
    }
  }
  {
    auto f = w.csv("aggregate.csv", {"t", "y_eve", "y_total"});
    const auto& agg = s.aggregate;
    for (std::size_t i = 0; i < agg.total.size(); ++i) {
      row(f, {agg.total.time(i), agg.eve.at(i), agg.total.at(i)});
    }
  }
  auto j = w.json_report("williams.json",
                         {{"m", m},
                          {"eps", s.eps},
                          {"delta", c.delta},
                          {"clock", clock_json(s.clock)},
                          {"grafts", s.grafts.size()},
                          {"candidates", s.candidates},
                          {"accepted", s.accepted},
                          {"expected_candidates", s.expected_candidates},
                          {"extinction_time", number_or_null(s.aggregate.total.extinction_time)}});
  out << j.dump() << '\n';
  return exit_ok;
}

auto forward_simulate(const Run_config& c, std::ostream& out) -> int {
  if (!(c.x > 0.0)) throw Domain_error("forward simulate: x must be > 0");
  auto split = make_split(c);
  auto stepper = Pair_stepper{split, forward_options(c)};
  auto g = Replica_streams{c.seed, 0}.stream(Stream_role::forward);
  auto p = simulate_pair(stepper, c.x, c.horizon, c.delta, g);
  auto w = Writer{c};
  auto f = w.csv("forward.csv", {"t", "y_eve", "y_total"});
  for (std::size_t i = 0; i < p.total.size(); ++i) row(f, {p.total.time(i), p.eve.at(i), p.total.at(i)});
  auto j = w.json_report(
      "forward.json",
      {{"delta", c.delta},
       {"x", c.x},
       {"horizon", c.horizon},
       {"extinction_time", {{"eve", number_or_null(p.eve.extinction_time)},
                            {"total", number_or_null(p.total.extinction_time)}}},
       {"bias", {{"exact_marginals", stepper.exact()},
                 {"operator_splitting", !stepper.exact()},
                 {"small_jump_cutoff", stepper.ell_cut()}}}});
  out << j.dump() << '\n';
  return exit_ok;
}

auto laplace_solve(const Run_config& c, std::ostream& out) -> int {
  auto split = make_split(c);
  auto k = make_kernel(c, split.total());
  auto opt = Laplace_options{};
  opt.max_step = c.max_step;
  opt.guard = c.guard;
  auto m = c.m.value_or(inf);
  auto s = solve(split, k, c.functional, m, opt);
  auto [w0, ws0] = w_at_zero(s);
  auto w = Writer{c};
  auto f = w.csv("laplace.csv", {"t", "w", "w_star"});
  for (std::size_t i = 0; i < s.t.size(); ++i) row(f, {s.t[i], s.w[i], s.w_star[i]});
  auto j = w.json_report("laplace.json", {{"w0", w0},
                                          {"wstar0", ws0},
                                          {"m", number_or_null(m)},
                                          {"a_bar", s.a_bar},
                                          {"grid", s.t.size()}});
  out << j.dump() << '\n';
  return exit_ok;
}

auto verify_laplace(const Run_config& c, std::ostream& out) -> int {
  auto split = make_split(c);
  auto k = make_kernel(c, split.total());
  auto d = Decomposer{split, k, williams_options(c)};
  auto mc = Laplace_mc{c.n, c.m_hi, c.seed, c.threads, true};
  auto e = laplace_estimate(d, c.functional, mc);
  auto opt = Laplace_options{};
  opt.max_step = c.max_step;
  opt.guard = c.guard;
  auto w0 = w_at_zero(solve(split, k, c.functional, inf, opt)).first;
  auto se = e.value.std_error;
  auto gap = e.value.mean - w0;
  auto pass = std::abs(gap) <= 3.0 * se + e.bias_budget;
  auto w = Writer{c};
  auto j = w.json_report("verify_laplace.json",
                         {{"estimate", e.value.mean},
                          {"stderr", se},
                          {"ode_value", w0},
                          {"z_score", se > 0.0 ? gap / se : 0.0},
                          {"bias_budget", e.bias_budget},
                          {"tail_bound", e.tail_bound},
                          {"window_estimate", e.window.mean},
                          {"tail_estimate", e.tail.mean},
                          {"n", c.n},
                          {"pass", pass}});
  out << j.dump() << '\n';
  return pass ? exit_ok : exit_acceptance;
}

auto verify_extinction(const Run_config& c, std::ostream& out) -> int {
  auto split = make_split(c);
  auto k = make_kernel(c, split.total());
  auto cfg = Extinction_table_config{};
  cfg.x = c.x;
  cfg.delta = c.delta;
  cfg.bin_width = c.bin_width;
  cfg.max_time = c.max_time;
  cfg.n = c.n;
  cfg.seed = c.seed;
  cfg.threads = c.threads;
  cfg.min_events = c.min_events;
  cfg.forward = forward_options(c);
  auto t = conditional_extinction_table(split, k, cfg);
  auto w = Writer{c};
  auto f = w.csv("extinction_table.csv",
                 {"lo", "hi", "m_mid", "events", "simultaneous", "p_hat", "stderr", "p_formula",
                  "p_formula_events", "p_hat_half_delta", "p_hat_two_delta", "populated", "pass"});
  for (const auto& b : t.bins) {
    f << format_number(b.lo) << ',' << format_number(b.hi) << ',' << format_number(b.m_mid) << ','
      << b.events << ',' << b.simultaneous << ',' << format_number(b.p_hat) << ','
      << format_number(b.std_error) << ',' << format_number(b.p_formula) << ','
      << format_number(b.p_formula_events) << ','
      << format_number(b.p_hat_half) << ',' << format_number(b.p_hat_double) << ','
      << (b.populated ? 1 : 0) << ',' << (b.pass ? 1 : 0) << '\n';
  }
  auto populated = t.populated();
  auto passed = t.passed();
  auto pass = populated > 0 && 10 * passed >= 9 * populated;
  auto j = w.json_report("verify_extinction.json", {{"populated_bins", populated},
                                                    {"passed_bins", passed},
                                                    {"censored", t.censored},
                                                    {"n", c.n},
                                                    {"pass", pass}});
  out << j.dump() << '\n';
  return pass ? exit_ok : exit_acceptance;
}

auto verify_all(const Run_config& c, const std::vector<std::string>& only, std::ostream& out)
    -> int {
  auto cfg = Acceptance_config{};
  cfg.seed = c.seed;
  cfg.threads = c.threads;
  cfg.scale = c.scale;
  auto ids = only.empty() ? acceptance_ids() : only;
  auto verdicts = json::array();
  auto all = true;
  for (const auto& id : ids) {
    auto v = run_acceptance(id, cfg);
    auto extras = json::object();
    for (const auto& [name, x] : v.extras) extras[name] = x;
    verdicts.push_back({{"id", v.id},
                        {"title", v.title},
                        {"target", v.target},
                        {"estimate", v.estimate},
                        {"stderr", v.std_error},
                        {"z", v.z},
                        {"pass", v.pass},
                        {"extras", extras},
                        {"note", v.note}});
    // Runtimes vary between runs and stay out of the report.
    out << v.id << ' ' << (v.pass ? "PASS" : "FAIL") << " z=" << format_number(v.z)
        << " seconds=" << format_number(std::round(v.seconds * 100.0) / 100.0) << '\n';
    all = all && v.pass;
  }
  auto w = Writer{c};
  w.json_report("acceptance.json", {{"verdicts", verdicts}, {"scale", c.scale}, {"pass", all}});
  return all ? exit_ok : exit_acceptance;
}

}  // namespace

auto format_number(double x) -> std::string {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

auto run(std::vector<std::string> args, std::ostream& out, std::ostream& err) -> int {
  auto app = CLI::App{"Continuous-state branching processes: kernels, spine decomposition, "
                      "simultaneous extinction",
                      "csbp"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", version);
  auto o = Overrides{};
  app.add_option("-c,--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--output-dir", o.output_dir, "directory for CSV/JSON output");
  app.add_option("--seed", o.seed, std::string("master seed (overrides ") + seed_env + ")");
  app.add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--n", o.n, "Monte Carlo sample size")->check(CLI::PositiveNumber);
  app.add_option("--delta", o.delta, "time grid step")->check(CLI::PositiveNumber);
  app.add_option("--eps", o.eps, "excursion lifetime cutoff")->check(CLI::PositiveNumber);
  app.add_option("--m", o.m, "extinction time / horizon")->check(CLI::PositiveNumber);
  app.add_option("--x", o.x, "initial mass")->check(CLI::PositiveNumber);
  app.add_option("--horizon", o.horizon, "forward simulation horizon")->check(CLI::PositiveNumber);
  app.add_option("--lambda", o.lambda, "lambda for the kernel table")->check(CLI::NonNegativeNumber);
  app.add_option("--scale", o.scale, "acceptance sample-size multiplier")->check(CLI::PositiveNumber);

  auto action = std::function<int(const Run_config&)>{};
  auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& help,
                  std::function<int(const Run_config&)> f) {
    auto* sub = parent->add_subcommand(name, help);
    sub->callback([&action, f] { action = f; });
    return sub;
  };
  auto group = [&](const std::string& name, const std::string& help) {
    auto* g = app.add_subcommand(name, help);
    g->require_subcommand(1);
    return g;
  };

  auto* mech = group("mechanism", "mechanism checks");
  leaf(mech, "validate", "check mechanism and split invariants",
       [&](const Run_config& c) { return mechanism_validate(c, out); });
  auto* kern = group("kernel", "extinction kernel");
  leaf(kern, "table", "tabulate c, |c'| and u(lambda, .) on a log grid",
       [&](const Run_config& c) { return kernel_table(c, out); });
  leaf(&app, "extinction-prob", "probability of simultaneous extinction at m",
       [&](const Run_config& c) { return extinction_prob(c, out); });
  auto* sp = group("spine", "spine measure");
  leaf(sp, "sample", "draw a marked spine and its mutation clock",
       [&](const Run_config& c) { return spine_sample(c, out); });
  auto* wi = group("williams", "decomposition conditioned on the extinction time");
  leaf(wi, "sample", "draw one decomposition",
       [&](const Run_config& c) { return williams_sample(c, out); });
  auto* fw = group("forward", "forward simulation");
  leaf(fw, "simulate", "simulate an (Eve, total) pair on the grid",
       [&](const Run_config& c) { return forward_simulate(c, out); });
  auto* la = group("laplace", "backward Laplace system");
  leaf(la, "solve", "solve for (w, w*) on [0, a_bar]",
       [&](const Run_config& c) { return laplace_solve(c, out); });
  auto* ve = group("verify", "Monte Carlo checks");
  leaf(ve, "laplace", "decomposition Laplace functional vs the ODE",
       [&](const Run_config& c) { return verify_laplace(c, out); });
  leaf(ve, "extinction", "forward simultaneous-extinction frequency vs the formula",
       [&](const Run_config& c) { return verify_extinction(c, out); });
  auto* all = leaf(ve, "all", "acceptance criteria A1-A10",
                   [&](const Run_config& c) { return verify_all(c, o.only, out); });
  all->add_option("--only", o.only, "subset of criteria, e.g. A1 A6");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::CallForVersion&) {
    out << version << '\n';
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return exit_usage;
  }
  if (!action) {
    err << "usage error: incomplete command\n" << app.help();
    return exit_usage;
  }

  try {
    return action(effective_config(o));
  } catch (const Numeric_error& e) {
    err << "numeric error: " << e.what() << '\n';
    return exit_numeric;
  } catch (const Validation_error& e) {
    err << "validation error: " << e.what() << '\n';
    return exit_validation;
  } catch (const Config_error& e) {
    err << "configuration error: " << e.what() << '\n';
    return exit_validation;
  } catch (const Domain_error& e) {
    err << "invalid argument: " << e.what() << '\n';
    return exit_validation;
  } catch (const Unsupported_error& e) {
    err << "unsupported: " << e.what() << '\n';
    return exit_validation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_numeric;
  }
}

}  // namespace csbp::cli
