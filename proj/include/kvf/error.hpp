#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kvf {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operands with incompatible shapes (jet variable count/order, tensor rank).
class StructuralError : public Error {
public:
    using Error::Error;
};

/// A function evaluated outside its domain (sqrt of a non-positive jet, 1/0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A derivative was requested beyond the order carried by a jet or curvature record.
class OrderError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string& message, const std::string& source = "")
        : Error((source.empty() ? "" : source + ": ") + "line " + std::to_string(line) + ", column " +
                std::to_string(column) + ": " + message),
          line_(line),
          column_(column),
          message_(message) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::size_t line_;
    std::size_t column_;
    std::string message_;
};

/// Semantically invalid chart description (unknown identifier, asymmetric grid, ...).
class SpecError : public Error {
public:
    using Error::Error;
};

/// Invalid parameter for a built-in geometry.
class ParameterError : public SpecError {
public:
    using SpecError::SpecError;
};

class DegenerateMetricError : public Error {
public:
    using Error::Error;
};

/// An operation was called on inputs that violate its contract (e.g. a non-Killing field).
class PreconditionError : public Error {
public:
    using Error::Error;
};

}  // namespace kvf
