#pragma once

#include <stdexcept>
#include <string>

namespace mmot {

// Bad sizes, signs or mode combinations passed to a constructor or solver.
class InvalidParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of a map, cdf or potential.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// File parsing / format problems; carries the offending 1-based row if known.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what, long row = -1)
      : std::runtime_error(row >= 0 ? what + " (row " + std::to_string(row) + ")"
                                    : what),
        row_(row) {}
  long row() const noexcept { return row_; }

 private:
  long row_;
};

// A marginal constraint cannot be met (zero partial sum against positive mass).
class InfeasibilityError : public std::runtime_error {
 public:
  explicit InfeasibilityError(const std::string& what, long index = -1)
      : std::runtime_error(what), index_(index) {}
  long index() const noexcept { return index_; }

 private:
  long index_;
};

// The equilibrium-equation integrand is singular on a positive-mass set.
class SingularIntegrandError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mmot
