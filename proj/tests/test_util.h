#pragma once

#include <ostream>

#include "csbp/mechanism.h"

namespace csbp {

// Readable parameter names in gtest / ctest output.
inline void PrintTo(const Mechanism_params& p, std::ostream* os) {
  *os << "a" << p.alpha0 << "_b" << p.beta;
  switch (p.pi.kind()) {
    case Levy_measure::Kind::zero:
      break;
    case Levy_measure::Kind::atoms:
      *os << "_atoms" << p.pi.atom_list().size();
      break;
    case Levy_measure::Kind::power_law:
      *os << "_pow" << p.pi.gamma();
      break;
  }
}

}  // namespace csbp
