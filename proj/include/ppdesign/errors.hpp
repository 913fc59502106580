#pragma once

#include <stdexcept>
#include <string>

namespace ppdesign {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration values or input setup.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Caller violated an operation precondition.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Malformed input text; carries the 1-based line number where known.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, long line = -1)
        : Error(line > 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
          line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

/// Non-finite values or degenerate numerics, with diagnostics in the message.
class NumericError : public Error {
public:
    using Error::Error;
};

/// File system failures, with the offending path in the message.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace ppdesign
