#pragma once

#include <stdexcept>
#include <string>

namespace ksm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data.
struct InvalidInput : Error {
  using Error::Error;
};

// Argument outside the domain of a function (polytope, sigma interval, ...).
struct DomainError : Error {
  using Error::Error;
};

struct UnsupportedDimension : Error {
  using Error::Error;
};

struct QuadratureError : Error {
  using Error::Error;
};

// Primal integration window does not capture the mass of e^{-u}.
struct WindowTooSmall : Error {
  using Error::Error;
};

}  // namespace ksm
