#pragma once

#include <stdexcept>
#include <string>

namespace csbp {

// Argument outside the mathematical domain of an operation (negative lambda,
// non-positive time, empty window, ...).
class Domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Inputs violate a structural invariant of a mechanism or split.
class Validation_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Valid inputs that a particular operation does not support (e.g. an
// exponential tilt of a power-law measure).
class Unsupported_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Quadrature / root-finding / ODE failure. Carries a human-readable
// diagnostic describing the failing evaluation.
class Numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Run configuration that cannot be honoured (budget exceeded, acceptance
// probability vanishing, malformed config file).
class Config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace csbp
