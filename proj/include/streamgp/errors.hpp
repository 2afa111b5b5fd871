#pragma once

#include <stdexcept>
#include <string>

namespace streamgp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments: shape mismatches, non-finite values, malformed files.
class InputError : public Error {
 public:
  using Error::Error;
};

// Factorization failures and other floating-point breakdowns.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Operation not valid for the object's current state (e.g. missing checkpoint).
class StateError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace streamgp
