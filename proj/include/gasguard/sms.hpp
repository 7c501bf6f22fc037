#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace gasguard {

inline constexpr std::size_t kMaxSmsBody = 160;

struct SmsMessage {
    std::string destination;  // '+' followed by 7-15 digits
    std::string body;         // printable ASCII, no 0x1A
    std::int64_t accepted_at_ms = 0;
    int message_ref = 0;      // assigned by the modem on acceptance

    friend bool operator==(const SmsMessage&, const SmsMessage&) = default;
};

}  // namespace gasguard
