#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace concur {

// Arguments outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// The requested (model, operation) combination is not available, e.g. a
// k-variate exponent function for a model with only a bivariate closed form.
class CapabilityError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

// Numerical failure, e.g. a covariance that stays indefinite after jitter.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. `line()` is 1-based and counts the header line.
class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

} // namespace concur
