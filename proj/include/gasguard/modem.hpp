#pragma once

// GSM module emulation: a text-mode AT dialect over a byte stream.
//
//   AT                       Attention
//   AT+CMGF=<0|1>            SetTextMode (only 1 is accepted by execute)
//   AT+CMGS="<+digits>"      SendSms, answered with the "> " prompt
//   <text><0x1A>             SmsBody
//   AT+CREG?                 RegistrationQuery
//   AT+CIPSTART="<host>",<port>
//   AT+CIPSEND=<len>         followed by exactly len payload bytes
//   AT+CIPCLOSE
//
// Command lines end in CR. Command heads are case-insensitive.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "gasguard/error.hpp"
#include "gasguard/sms.hpp"
#include "gasguard/telemetry.hpp"

namespace gasguard {

inline constexpr char kCtrlZ = '\x1A';
inline constexpr std::size_t kMaxAtLine = 256;
inline constexpr std::size_t kMaxCipSend = 1460;

struct Attention { friend bool operator==(const Attention&, const Attention&) = default; };
struct SetTextMode { bool enabled = true; friend bool operator==(const SetTextMode&, const SetTextMode&) = default; };
struct SendSms { std::string destination; friend bool operator==(const SendSms&, const SendSms&) = default; };
struct SmsBody { std::string text; friend bool operator==(const SmsBody&, const SmsBody&) = default; };
struct RegistrationQuery { friend bool operator==(const RegistrationQuery&, const RegistrationQuery&) = default; };
struct DataOpen {
    std::string host;
    std::uint16_t port = 0;
    friend bool operator==(const DataOpen&, const DataOpen&) = default;
};
struct DataSend { std::size_t length = 0; friend bool operator==(const DataSend&, const DataSend&) = default; };
struct DataPayload { std::string bytes; friend bool operator==(const DataPayload&, const DataPayload&) = default; };
struct DataClose { friend bool operator==(const DataClose&, const DataClose&) = default; };

using AtCommand = std::variant<Attention, SetTextMode, SendSms, SmsBody, RegistrationQuery, DataOpen,
                               DataSend, DataPayload, DataClose>;

/// Offending byte range inside the unit handed to the parser.
struct ByteSpan {
    std::size_t offset = 0;
    std::size_t length = 0;
};

class ParseError : public Error {
public:
    ParseError(ByteSpan span, const std::string& what)
        : Error(what + " at [" + std::to_string(span.offset) + ", +" + std::to_string(span.length) + ")"),
          span_(span) {}

    ByteSpan span() const noexcept { return span_; }

private:
    ByteSpan span_;
};

/// '+' followed by 7-15 digits.
bool valid_sms_destination(std::string_view number) noexcept;

/// Parses one CR-terminated command line or one 0x1A-terminated SMS body.
AtCommand parse_at(std::string_view unit);

/// Raw CIPSEND payload; its size must equal the announced length.
DataPayload parse_payload(std::string_view bytes, std::size_t expected_length);

/// Wire bytes for a command, terminator included.
std::string serialize_command(const AtCommand& command);

struct AtResponse {
    std::vector<std::string> lines;
    bool prompt = false;

    static AtResponse ok() { return {{"OK"}, false}; }
    static AtResponse error() { return {{"ERROR"}, false}; }
    static AtResponse input_prompt() { return {{}, true}; }
    static AtResponse cmgs(int n) { return {{"+CMGS: " + std::to_string(n), "OK"}, false}; }
    static AtResponse cms_error(int code) { return {{"+CMS ERROR: " + std::to_string(code)}, false}; }

    friend bool operator==(const AtResponse&, const AtResponse&) = default;
};

/// "\r\n<line>\r\n" per line; the prompt is the bare "> ".
std::string serialize_response(const AtResponse& response);

struct DataEndpoint {
    std::string host;
    std::uint16_t port = 0;
    friend bool operator==(const DataEndpoint&, const DataEndpoint&) = default;
};

struct ModemState {
    bool registered = true;
    bool text_mode = false;
    std::optional<std::string> awaiting_body;     // destination of the SMS being composed
    std::optional<DataEndpoint> data_channel;     // nullopt means Closed
    std::optional<std::size_t> awaiting_payload;  // announced CIPSEND length
    std::vector<SmsMessage> outbox;               // append-only
    int sms_counter = 0;
};

/// Pure transition. Data commands only change channel bookkeeping; moving the
/// bytes is Modem's job.
std::pair<ModemState, AtResponse> execute(ModemState state, const AtCommand& command, std::int64_t now_ms);

/// Transport behind the modem's data channel.
class DataLink {
public:
    virtual ~DataLink() = default;
    virtual bool open(const std::string& host, std::uint16_t port) = 0;
    /// Delivers one payload and returns the peer's reply line (without '\n'),
    /// or nullopt when the transport failed.
    virtual std::optional<std::string> send(std::string_view payload) = 0;
    virtual void close() = 0;
};

struct TransmitResult {
    bool ack = false;
    std::string reply;  // peer reply, e.g. "ACK 12" or "ERR duplicate"
};

/// Stateful modem: frames the serial byte stream, executes commands and drives
/// the data link.
class Modem {
public:
    /// Observer for serial traffic; direction is ">>" (to modem) or "<<".
    using Transcript = std::function<void(std::string_view direction, std::string_view bytes)>;

    explicit Modem(DataLink* link = nullptr) : link_(link) {}

    void set_transcript(Transcript transcript) { transcript_ = std::move(transcript); }

    /// Feeds serial bytes and returns everything the modem writes back.
    std::string feed(std::string_view bytes, std::int64_t now_ms);

    AtResponse execute(const AtCommand& command, std::int64_t now_ms);

    /// Sends one encoded record through AT+CIPSEND. Throws DeliveryError when
    /// the channel is closed or the transport drops.
    TransmitResult transmit_telemetry(const TelemetryRecord& record, std::int64_t now_ms);

    const ModemState& state() const noexcept { return state_; }
    std::vector<SmsMessage> outbox_snapshot() const { return state_.outbox; }

private:
    void dispatch(std::string_view unit, std::int64_t now_ms, std::string& out);

    ModemState state_;
    DataLink* link_;
    Transcript transcript_;
    std::string pending_;
    std::optional<char> discard_until_;
    std::optional<std::string> last_peer_reply_;
};

}  // namespace gasguard
