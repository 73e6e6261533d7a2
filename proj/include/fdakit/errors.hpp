#pragma once

#include <stdexcept>
#include <string>

namespace fdakit {

/// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument value (sizes, orders, probabilities, ...).
class ParameterError : public Error {
  public:
    using Error::Error;
};

/// Evaluation point outside the basis domain.
class DomainError : public Error {
  public:
    using Error::Error;
};

class EmptyInputError : public Error {
  public:
    using Error::Error;
};

/// Singular systems, rank deficiency and other numerical breakdowns.
class NumericalError : public Error {
  public:
    using Error::Error;
};

/// Too few observations for the requested fit.
class InsufficientDataError : public Error {
  public:
    using Error::Error;
};

/// Monotone smoothing was asked to fit a decreasing trend.
class MonotoneDirectionError : public Error {
  public:
    using Error::Error;
};

/// Design matrix columns are linearly dependent.
class CollinearityError : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

/// Malformed input file row. Carries the 1-based line and the column name.
class ParseError : public Error {
  public:
    ParseError(std::size_t line, std::string column, const std::string& what)
        : Error("line " + std::to_string(line) + ", column \"" + column + "\": " + what),
          line_(line),
          column_(std::move(column)) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& column() const noexcept { return column_; }

  private:
    std::size_t line_;
    std::string column_;
};

/// Cross-file consistency failure (unknown ids, missing attribute rows).
class IntegrityError : public Error {
  public:
    using Error::Error;
};

/// Value outside its admissible range (bid time beyond the auction).
class RangeError : public Error {
  public:
    using Error::Error;
};

}  // namespace fdakit
