#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace gasguard {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// ADC input at or beyond full scale; the concentration cannot be recovered.
class SaturationError : public Error {
public:
    using Error::Error;
};

/// Caller broke a precondition (empty input, inverted range, clock going backwards).
class UsageError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Telemetry delivery failed because the data channel is not open.
class DeliveryError : public Error {
public:
    using Error::Error;
};

class StartupError : public Error {
public:
    using Error::Error;
};

class IngestError : public Error {
public:
    using Error::Error;
};

class RecoveryError : public Error {
public:
    RecoveryError(std::uint64_t offset, const std::string& what)
        : Error("log offset " + std::to_string(offset) + ": " + what), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

/// Scenario file rejected. line is 1-based; 0 when the problem is file-wide.
class LoadError : public Error {
public:
    LoadError(std::size_t line, std::string field, const std::string& what)
        : Error(format(line, field, what)), line_(line), field_(std::move(field)) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    static std::string format(std::size_t line, const std::string& field, const std::string& what) {
        std::string out = line ? "line " + std::to_string(line) : std::string("scenario");
        if (!field.empty()) out += " (" + field + ")";
        return out + ": " + what;
    }

    std::size_t line_;
    std::string field_;
};

}  // namespace gasguard
