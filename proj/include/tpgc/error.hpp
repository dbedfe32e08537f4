#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tpgc {

/// Base for every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the CLI's JSON error output.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& what) : Error("dimension_mismatch", what) {}
};

class SupportError : public Error {
public:
    explicit SupportError(const std::string& what) : Error("support_mismatch", what) {}
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error("invalid_argument", what) {}
};

class InternalError : public Error {
public:
    explicit InternalError(const std::string& what) : Error("internal_error", what) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error("non_finite", what) {}
};

class ParseError : public Error {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& what)
        : Error("parse_error", file + ":" + std::to_string(line) + ": " + what), file_(file), line_(line) {}

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

}  // namespace tpgc
