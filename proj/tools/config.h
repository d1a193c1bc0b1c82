#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "csbp/laplace.h"
#include "csbp/mechanism.h"

namespace csbp::cli {

inline constexpr const char* version = "0.1.0";
inline constexpr const char* seed_env = "CSBP_SEED";

// Effective configuration of one run. JSON file first, then the environment
// seed, then command-line flags.
struct Run_config {
  // mechanism
  Mechanism_params mechanism{0.0, 1.0, Levy_measure::zero()};
  // split: either (nu, alpha_imm) or the shifted mechanism at theta
  Levy_measure nu;
  double alpha_imm = 0.0;
  std::optional<double> theta;
  // numeric
  double delta = 1e-2;
  double eps = 1e-3;
  double quad_tol = 1e-13;
  double max_step = 1e-3;
  double guard = 0.1;
  double small_jump_variance = 0.1;
  double t_min = 0.01;  // kernel table
  double t_max = 10.0;
  int points = 50;
  double lambda = 1.0;
  // mc
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  double m_lo = 0.0;  // window for sampled horizons; 0 means eps
  double m_hi = 8.0;
  double bin_width = 0.25;
  double max_time = 20.0;
  long min_events = 50;
  unsigned threads = 1;
  double scale = 1.0;  // acceptance sample-size multiplier
  // run
  std::optional<double> m;  // horizon; laplace defaults to inf, samplers draw one
  double x = 1.0;
  double horizon = 10.0;  // forward simulate
  Test_functional functional = single_atom(0.5, 0.0, 1.0);
  std::string output_dir = ".";

  auto split_params() const -> Split_params;
};

// Throws Config_error on malformed input or unknown keys. Mechanism and
// split invariants are not checked here.
auto parse_config(const nlohmann::json& j) -> Run_config;
auto load_config(const std::string& path) -> Run_config;

// Canonical form (sorted keys, no output paths).
auto to_json(const Run_config& c) -> nlohmann::json;
// FNV-1a of the canonical form, 16 hex digits.
auto config_hash(const Run_config& c) -> std::string;

}  // namespace csbp::cli
