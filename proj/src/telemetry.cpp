#include "gasguard/telemetry.hpp"

#include <array>
#include <limits>

#include <json.hpp>

namespace gasguard {

namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 7> kKeys{"device_id", "seq", "timestamp_ms", "gas",
                                                "ppm",       "adc_code", "alarm"};

[[noreturn]] void fail(FrameErrorReason reason, const std::string& detail) {
    throw FrameError(reason, detail);
}

const json& field(const json& obj, std::string_view key) {
    auto it = obj.find(key);
    if (it == obj.end()) fail(FrameErrorReason::MissingField, std::string(key));
    return *it;
}

std::uint64_t unsigned_field(const json& obj, std::string_view key, std::uint64_t max) {
    const json& v = field(obj, key);
    if (!v.is_number_integer()) fail(FrameErrorReason::Type, std::string(key) + " must be an integer");
    if (v.is_number_unsigned()) {
        auto u = v.get<std::uint64_t>();
        if (u > max) fail(FrameErrorReason::Range, std::string(key) + " out of range");
        return u;
    }
    auto s = v.get<std::int64_t>();
    if (s < 0) fail(FrameErrorReason::Range, std::string(key) + " must be non-negative");
    if (static_cast<std::uint64_t>(s) > max) fail(FrameErrorReason::Range, std::string(key) + " out of range");
    return static_cast<std::uint64_t>(s);
}

}  // namespace

std::string_view to_string(FrameErrorReason reason) noexcept {
    switch (reason) {
        case FrameErrorReason::Unterminated: return "unterminated";
        case FrameErrorReason::Syntax: return "syntax";
        case FrameErrorReason::MissingField: return "missing_field";
        case FrameErrorReason::ExtraField: return "extra_field";
        case FrameErrorReason::DuplicateField: return "duplicate_field";
        case FrameErrorReason::Type: return "type";
        case FrameErrorReason::Range: return "range";
        case FrameErrorReason::DeviceId: return "device_id";
        case FrameErrorReason::Gas: return "gas";
    }
    return "unknown";
}

bool valid_device_id(std::string_view id) noexcept {
    if (id.empty() || id.size() > kMaxDeviceIdLength) return false;
    for (char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '_' || c == '-';
        if (!ok) return false;
    }
    return true;
}

void validate_record(const TelemetryRecord& r) {
    if (!valid_device_id(r.device_id)) fail(FrameErrorReason::DeviceId, "invalid device_id");
    if (r.timestamp_ms < 0) fail(FrameErrorReason::Range, "timestamp_ms must be non-negative");
    if (r.ppm < 0) fail(FrameErrorReason::Range, "ppm must be non-negative");
    if (r.adc_code < 0 || r.adc_code > kMaxWireAdcCode) fail(FrameErrorReason::Range, "adc_code out of range");
    if (r.seq > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
        fail(FrameErrorReason::Range, "seq out of range");
    }
}

std::string encode_frame(const TelemetryRecord& r) {
    validate_record(r);
    // device_id is restricted to characters that need no JSON escaping.
    std::string out;
    out.reserve(128);
    out += "{\"device_id\":\"";
    out += r.device_id;
    out += "\",\"seq\":";
    out += std::to_string(r.seq);
    out += ",\"timestamp_ms\":";
    out += std::to_string(r.timestamp_ms);
    out += ",\"gas\":\"";
    out += to_string(r.gas);
    out += "\",\"ppm\":";
    out += std::to_string(r.ppm);
    out += ",\"adc_code\":";
    out += std::to_string(r.adc_code);
    out += ",\"alarm\":";
    out += r.alarm ? "true" : "false";
    out += "}\n";
    return out;
}

TelemetryRecord decode_frame(std::string_view frame) {
    if (frame.empty() || frame.back() != '\n') fail(FrameErrorReason::Unterminated, "frame must end with newline");
    frame.remove_suffix(1);
    if (frame.find('\n') != std::string_view::npos) fail(FrameErrorReason::Unterminated, "embedded newline");

    bool duplicate = false;
    std::array<bool, kKeys.size()> seen{};
    json::parser_callback_t track = [&](int depth, json::parse_event_t event, json& parsed) {
        if (event == json::parse_event_t::key && depth == 1) {
            const auto& key = parsed.get_ref<const std::string&>();
            for (std::size_t i = 0; i < kKeys.size(); ++i) {
                if (kKeys[i] == key) {
                    if (seen[i]) duplicate = true;
                    seen[i] = true;
                }
            }
        }
        return true;
    };

    json obj = json::parse(frame.begin(), frame.end(), track, /*allow_exceptions=*/false);
    if (obj.is_discarded() || !obj.is_object()) fail(FrameErrorReason::Syntax, "not a JSON object");
    if (duplicate) fail(FrameErrorReason::DuplicateField, "repeated key");
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (auto k : kKeys) known = known || k == key;
        if (!known) fail(FrameErrorReason::ExtraField, key);
    }

    TelemetryRecord r;
    const json& dev = field(obj, "device_id");
    if (!dev.is_string()) fail(FrameErrorReason::Type, "device_id must be a string");
    r.device_id = dev.get<std::string>();
    if (!valid_device_id(r.device_id)) fail(FrameErrorReason::DeviceId, "invalid device_id");

    constexpr auto kInt64Max = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());
    r.seq = unsigned_field(obj, "seq", kInt64Max);
    r.timestamp_ms = static_cast<std::int64_t>(unsigned_field(obj, "timestamp_ms", kInt64Max));

    const json& gas = field(obj, "gas");
    if (!gas.is_string()) fail(FrameErrorReason::Type, "gas must be a string");
    auto species = gas_from_string(gas.get_ref<const std::string&>());
    if (!species) fail(FrameErrorReason::Gas, "unknown gas");
    r.gas = *species;

    r.ppm = static_cast<std::int64_t>(unsigned_field(obj, "ppm", kInt64Max));
    r.adc_code = static_cast<std::int32_t>(unsigned_field(obj, "adc_code", kMaxWireAdcCode));

    const json& alarm = field(obj, "alarm");
    if (!alarm.is_boolean()) fail(FrameErrorReason::Type, "alarm must be a boolean");
    r.alarm = alarm.get<bool>();
    return r;
}

}  // namespace gasguard
