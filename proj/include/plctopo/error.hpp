#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace plctopo {

/// Base class for every data error raised by the library. The CLI maps these
/// to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// Terminated-line relation has a vanishing denominator (resonant open/short).
class SingularLine : public Error {
public:
    using Error::Error;
};

/// Load inversion has no finite solution for the given input admittance.
class NoSolution : public Error {
public:
    using Error::Error;
};

/// Length inversion produced a value outside [0, lambda/4] or failed the
/// forward check.
class InconsistentMeasurement : public Error {
public:
    using Error::Error;
};

class GenerationError : public Error {
public:
    using Error::Error;
};

class InvalidNode : public Error {
public:
    using Error::Error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class InvalidComparison : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    /// line == 0 means the position is unknown (semantic rather than syntax errors).
    ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
        : Error(line == 0 ? what
                          : what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
          line_(line),
          column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

}  // namespace plctopo
