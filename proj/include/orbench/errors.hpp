#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace orbench {

/// Base of every error the toolkit throws. `kind()` is the stable machine-readable
/// name used in CLI error records.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class InvalidLabel : public Error {
public:
    explicit InvalidLabel(const std::string& msg) : Error("InvalidLabel", msg) {}
};

class InvalidTriplet : public Error {
public:
    explicit InvalidTriplet(const std::string& msg) : Error("InvalidTriplet", msg) {}
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& msg)
        : Error("ParseError", "line " + std::to_string(line) + ": " + msg), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public Error {
public:
    ValidationError(std::string locus, std::string field, const std::string& msg)
        : Error("ValidationError", locus + " [" + field + "]: " + msg),
          locus_(std::move(locus)),
          field_(std::move(field)) {}

    const std::string& locus() const noexcept { return locus_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::string locus_;
    std::string field_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error("IoError", msg) {}
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string& msg) : Error("UsageError", msg) {}
};

class ConsistencyError : public Error {
public:
    explicit ConsistencyError(const std::string& msg) : Error("ConsistencyError", msg) {}
};

class InsufficientData : public Error {
public:
    explicit InsufficientData(const std::string& msg) : Error("InsufficientData", msg) {}
};

} // namespace orbench
