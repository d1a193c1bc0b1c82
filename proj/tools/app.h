#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace csbp::cli {

enum Exit_code : int {
  exit_ok = 0,
  exit_validation = 1,
  exit_numeric = 2,
  exit_acceptance = 3,
  exit_usage = 64,
};

// Runs one command line (without the program name). Reports go to files in
// the output directory; a short summary goes to `out`, diagnostics to `err`.
auto run(std::vector<std::string> args, std::ostream& out, std::ostream& err) -> int;

// Shortest round-trip decimal; "inf" / "-inf" / "nan" for non-finite values.
auto format_number(double x) -> std::string;

}  // namespace csbp::cli
