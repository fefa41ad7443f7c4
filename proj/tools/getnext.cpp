#include <cstdlib>
#include <iostream>

#include "getnext/cli/commands.hpp"

int main(int argc, char** argv) {
  return getnext::cli::run(argc, argv, std::cout, std::cerr,
                           [](const char* name) { return std::getenv(name); });
}
