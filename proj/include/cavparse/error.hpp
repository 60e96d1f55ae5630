#pragma once

#include <stdexcept>
#include <string>

namespace cavparse {

// Caller supplied arguments or data that violate a documented precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Internal contract broken (unevaluated chromosome, fitness out of range, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed or corrupted on-disk artifact.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cavparse
