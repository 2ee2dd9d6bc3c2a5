#pragma once

#include <stdexcept>
#include <string>

namespace fedexprox {

// Caller broke a documented precondition (bad dimensions, inadmissible
// step size, invalid configuration).  Maps to CLI exit code 2.
class ContractError : public std::invalid_argument {
 public:
  explicit ContractError(const std::string& what)
      : std::invalid_argument(what) {}
};

// A numerical subroutine that must succeed failed (singular factorization,
// non-converged spectral estimate).  Maps to CLI exit code 3.
class OracleError : public std::runtime_error {
 public:
  explicit OracleError(const std::string& what) : std::runtime_error(what) {}
};

// Instance generation could not satisfy its postconditions (rank or
// interpolation-residual checks).  Maps to CLI exit code 3.
class GenerationError : public std::runtime_error {
 public:
  explicit GenerationError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace fedexprox
