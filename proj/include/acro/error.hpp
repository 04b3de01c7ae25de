#pragma once

#include <stdexcept>
#include <string>

namespace acro {

// Base of everything the library throws on bad input.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed files, violated data invariants.
struct DataError : Error {
  using Error::Error;
};

// Operand shapes that cannot be combined.
struct ShapeError : Error {
  using Error::Error;
};

// Bad configuration or arguments supplied by the caller.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace acro
