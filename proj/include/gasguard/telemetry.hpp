#pragma once

// Telemetry wire format: one JSON object per '\n'-terminated line with exactly
// the keys device_id, seq, timestamp_ms, gas, ppm, adc_code, alarm.
// encode_frame always emits them in that order with no whitespace.

#include <cstdint>
#include <string>
#include <string_view>

#include "gasguard/error.hpp"
#include "gasguard/gas.hpp"

namespace gasguard {

struct TelemetryRecord {
    std::string device_id;
    std::uint64_t seq = 0;
    std::int64_t timestamp_ms = 0;
    GasSpecies gas = GasSpecies::LPG;
    std::int64_t ppm = 0;
    std::int32_t adc_code = 0;
    bool alarm = false;

    friend bool operator==(const TelemetryRecord&, const TelemetryRecord&) = default;
};

inline constexpr std::int32_t kMaxWireAdcCode = 1023;
inline constexpr std::size_t kMaxDeviceIdLength = 32;

enum class FrameErrorReason {
    Unterminated,  // no trailing '\n', or an embedded one
    Syntax,        // not a JSON object
    MissingField,
    ExtraField,
    DuplicateField,
    Type,
    Range,
    DeviceId,
    Gas,
};

/// Short token used on the ingest socket: "ERR <token>".
std::string_view to_string(FrameErrorReason reason) noexcept;

class FrameError : public Error {
public:
    FrameError(FrameErrorReason reason, const std::string& detail)
        : Error(std::string(to_string(reason)) + ": " + detail), reason_(reason) {}

    FrameErrorReason reason() const noexcept { return reason_; }

private:
    FrameErrorReason reason_;
};

/// 1-32 chars of [A-Za-z0-9_-].
bool valid_device_id(std::string_view id) noexcept;

/// Throws FrameError if the record could not be decoded back.
void validate_record(const TelemetryRecord& record);

/// Canonical frame, including the trailing '\n'.
std::string encode_frame(const TelemetryRecord& record);

/// Accepts exactly one '\n'-terminated frame.
TelemetryRecord decode_frame(std::string_view frame);

}  // namespace gasguard
