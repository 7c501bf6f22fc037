#pragma once

// Random value generators shared by the property tests and the acceptance
// suite.

#include <algorithm>
#include <random>
#include <string>

#include "gasguard/modem.hpp"
#include "gasguard/telemetry.hpp"

namespace gasguard::gen {

using Rng = std::mt19937_64;

inline std::uint64_t uniform(Rng& rng, std::uint64_t lo, std::uint64_t hi) {
    return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng);
}

inline std::string string_of(Rng& rng, std::string_view alphabet, std::size_t min_len, std::size_t max_len) {
    std::string out(uniform(rng, min_len, max_len), ' ');
    for (char& c : out) c = alphabet[uniform(rng, 0, alphabet.size() - 1)];
    return out;
}

inline constexpr std::string_view kIdChars = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-";
inline constexpr std::string_view kDigits = "0123456789";

inline TelemetryRecord record(Rng& rng) {
    TelemetryRecord r;
    r.device_id = string_of(rng, kIdChars, 1, 32);
    // Mix small values with the extremes of each range.
    auto pick = [&](std::uint64_t max) {
        switch (uniform(rng, 0, 3)) {
            case 0: return std::uint64_t{0};
            case 1: return max;
            case 2: return uniform(rng, 0, std::min<std::uint64_t>(max, 5000));
            default: return uniform(rng, 0, max);
        }
    };
    constexpr std::uint64_t kMax = 9223372036854775807ULL;
    r.seq = pick(kMax);
    r.timestamp_ms = static_cast<std::int64_t>(pick(kMax));
    r.gas = kAllGases[uniform(rng, 0, 3)];
    r.ppm = static_cast<std::int64_t>(pick(kMax));
    r.adc_code = static_cast<std::int32_t>(pick(kMaxWireAdcCode));
    r.alarm = uniform(rng, 0, 1) == 1;
    return r;
}

inline std::string printable(Rng& rng, std::size_t min_len, std::size_t max_len) {
    std::string out(uniform(rng, min_len, max_len), ' ');
    for (char& c : out) c = static_cast<char>(uniform(rng, 0x20, 0x7E));
    return out;
}

/// Any command variant except DataPayload (which has no self-delimiting form).
inline AtCommand command(Rng& rng) {
    switch (uniform(rng, 0, 7)) {
        case 0: return Attention{};
        case 1: return SetTextMode{uniform(rng, 0, 1) == 1};
        case 2: return SendSms{"+" + string_of(rng, kDigits, 7, 15)};
        case 3: {
            std::string text = printable(rng, 0, kMaxSmsBody);
            if (!text.empty() && uniform(rng, 0, 4) == 0) text[uniform(rng, 0, text.size() - 1)] = '\n';
            return SmsBody{text};
        }
        case 4: return RegistrationQuery{};
        case 5:
            return DataOpen{string_of(rng, "abcdefghijklmnopqrstuvwxyz0123456789.-_", 1, 40),
                            static_cast<std::uint16_t>(uniform(rng, 1, 65535))};
        case 6: return DataSend{uniform(rng, 1, kMaxCipSend)};
        default: return DataClose{};
    }
}

}  // namespace gasguard::gen
