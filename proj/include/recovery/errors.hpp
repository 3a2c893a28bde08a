#pragma once

#include <stdexcept>
#include <string>

namespace recovery {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data unusable: malformed files, gaps, non-positive values, too few points.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Numerical routines that could not produce a valid answer.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DegenerateSegment : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t row, const std::string& column, const std::string& what)
      : DataError("parse error at row " + std::to_string(row) + ", column '" +
                  column + "': " + what),
        row_(row),
        column_(column) {}
  std::size_t row() const { return row_; }
  const std::string& column() const { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

class GapError : public DataError {
 public:
  /// `label` is the period as written in the input, e.g. "1991" or "1995Q3".
  GapError(long missing, const std::string& label)
      : DataError("missing period " + label), missing_(missing) {}
  explicit GapError(long missing) : GapError(missing, std::to_string(missing)) {}
  long missing_period() const { return missing_; }

 private:
  long missing_;
};

class NonPositiveValue : public DataError {
 public:
  using DataError::DataError;
};

class NonConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class FitFailed : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonFiniteState : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DivisionByZero : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace recovery
