#pragma once

#include <stdexcept>
#include <string>

namespace trs {

/// Base of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates an operation's precondition.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A least-squares or search problem has no unique answer.
class FitError : public Error {
 public:
  using Error::Error;
};

/// The data carry no information about the requested quantity.
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// A file does not follow its CSV/JSON contract. `row` is 1-based and counts
/// the header line; 0 when the problem is not tied to a row.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t row = 0)
      : Error(row ? what + " (row " + std::to_string(row) + ")" : what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// Numerical blow-up (non-finite state, loss, or gradient).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace trs
