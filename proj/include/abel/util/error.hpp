#pragma once

#include <stdexcept>
#include <string>

namespace abel {

// Argument outside the mathematical domain of an operation (e.g. t > T).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid observation or input value (non-finite, non-positive, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed serialized payload.
class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or structure mismatch between tensors / layer sets.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite values produced during a numeric computation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace abel
