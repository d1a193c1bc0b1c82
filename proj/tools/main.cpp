#include <iostream>

#include "app.h"

auto main(int argc, char** argv) -> int {
  return csbp::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
