#pragma once

#include <stdexcept>
#include <string>

namespace getnext {

// Bad user input: missing files, malformed data, invalid configuration.
// The command-line front end maps this to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes that an operation cannot combine.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace getnext
