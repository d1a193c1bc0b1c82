#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "csbp/forward.h"
#include "csbp/kernel.h"
#include "csbp/stats.h"

namespace csbp {

// Per-bin counts of extinction times and of simultaneous extinctions.
// "Simultaneous" is decided at grid resolution: tau_total - tau_eve <= tol.
// Counts are kept for three tolerances (delta/2, delta, 2 delta) so the
// sensitivity to the grid reading can be reported.
class Conditional_binner {
 public:
  Conditional_binner(double bin_width, double max_time, double delta);

  void add(double tau_total, double tau_eve);
  auto bins() const -> std::size_t { return total_.size(); }
  auto lower(std::size_t i) const -> double { return width_ * static_cast<double>(i); }
  auto upper(std::size_t i) const -> double { return width_ * static_cast<double>(i + 1); }
  auto total(std::size_t i) const -> long { return total_[i]; }
  // tolerance index: 0 -> delta/2, 1 -> delta, 2 -> 2 delta
  auto simultaneous(std::size_t i, int tolerance = 1) const -> long;
  auto censored() const -> long { return censored_; }

 private:
  double width_;
  double delta_;
  std::vector<long> total_;
  std::vector<long> simultaneous_[3];
  long censored_ = 0;
};

struct Extinction_table_config {
  double x = 1.0;
  double delta = 1e-3;
  double bin_width = 0.25;
  double max_time = 20.0;
  std::size_t n = 100'000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  long min_events = 50;
  Forward_options forward;
};

struct Extinction_bin {
  double lo = 0.0;
  double hi = 0.0;
  double m_mid = 0.0;
  long events = 0;
  long simultaneous = 0;
  double p_hat = 0.0;
  double std_error = 0.0;
  double p_formula = 0.0;
  double p_formula_events = 0.0;  // formula averaged over the bin's extinction times
  double p_hat_half = 0.0;    // tolerance delta/2
  double p_hat_double = 0.0;  // tolerance 2 delta
  bool populated = false;     // at least min_events
  bool pass = false;          // within 3 stderr (populated bins only)
};

struct Extinction_table {
  std::vector<Extinction_bin> bins;
  long censored = 0;
  auto populated() const -> std::size_t;
  auto passed() const -> std::size_t;
};

// Forward pairs from (x, 0) on the grid; per bin of tau_total, the fraction
// of simultaneous extinctions against exp(-int_0^m phi'(c)) at the bin
// midpoint.
auto conditional_extinction_table(const Mutation_split& split, const Extinction_kernel& k,
                                  const Extinction_table_config& cfg) -> Extinction_table;

// ---- acceptance suite ------------------------------------------------------

struct Verdict {
  std::string id;
  std::string title;
  double target = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
  double z = 0.0;
  bool pass = false;
  double seconds = 0.0;
  std::vector<std::pair<std::string, double>> extras;
  std::string note;
};

struct Acceptance_config {
  std::uint64_t seed = 42;
  unsigned threads = 1;
  // Multiplies every Monte Carlo sample size; 1 runs the stated sizes.
  double scale = 1.0;
};

auto acceptance_ids() -> std::vector<std::string>;
auto run_acceptance(const std::string& id, const Acceptance_config& cfg) -> Verdict;

}  // namespace csbp
