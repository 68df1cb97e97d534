#pragma once

#include <stdexcept>
#include <string>

namespace reldep {

/// Broad failure categories. The CLI maps each one to a distinct exit code.
enum class ErrorKind { Usage, Data, Resource, Numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Invalid arguments or inconsistent configuration.
class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

/// Malformed input files.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

/// An enumeration would exceed the configured evaluation cap.
class ResourceError : public Error {
public:
    explicit ResourceError(const std::string& what) : Error(ErrorKind::Resource, what) {}
};

/// Numerical breakdown: non-PSD scale matrix, degenerate variance estimates.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

inline int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::Usage: return 2;
    case ErrorKind::Data: return 3;
    case ErrorKind::Resource: return 4;
    case ErrorKind::Numeric: return 5;
    }
    return 1;
}

} // namespace reldep
