#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace shapr {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid band plan, scene, hyperparameter or other configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Raw capture data that cannot be turned into a sweep.
class IngestError : public Error {
public:
    using Error::Error;
};

/// Malformed file content. The line number is 1-based; 0 means "not line specific".
class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : Error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Numerical failure (non-finite values, factorization breakdown, zero power).
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace shapr
