// Exception hierarchy shared by all kadj modules.
//
// Every failure mode surfaced by the library maps to one of these types so
// that the C API can translate exceptions into stable status codes.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace kadj {

// Root of all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Mismatched vector/matrix sizes, non-square inputs, empty inputs.
class DimensionError : public Error {
public:
  using Error::Error;
};

// An argument lies outside a scalar function's domain (e.g. log of a
// nonpositive Ritz value).
class DomainError : public Error {
public:
  using Error::Error;
};

// Krylov breakdown: an off-diagonal / subdiagonal coefficient fell below the
// scale-invariant threshold, either in the forward iteration (invariant
// subspace found) or in an adjoint back-substitution division.
class BreakdownError : public Error {
public:
  BreakdownError(const std::string& what, std::int64_t step)
      : Error(what), step_(step) {}
  std::int64_t step() const { return step_; }

private:
  std::int64_t step_;
};

// Input file could not be parsed; line() is the 1-based offending line.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::int64_t line)
      : Error(what), line_(line) {}
  std::int64_t line() const { return line_; }

private:
  std::int64_t line_;
};

// A matrix expected to be symmetric positive definite is not.
class NotSpdError : public Error {
public:
  using Error::Error;
};

// Generic numerical failure (singular capacitance matrix, ...).
class NumericalError : public Error {
public:
  using Error::Error;
};

// Floating-point overflow (e.g. matrix exponential out of double range).
class OverflowError : public Error {
public:
  using Error::Error;
};

// An API usage contract was violated (non-symmetric operator passed to a
// symmetric-only routine, pullback invoked twice, missing diag callback, ...).
class ContractError : public Error {
public:
  using Error::Error;
};

// File could not be opened/read/written.
class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace kadj
