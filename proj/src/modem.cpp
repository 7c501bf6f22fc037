#include "gasguard/modem.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace gasguard {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool valid_host_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_';
}

/// Unsigned decimal, at most max_digits digits, value in [lo, hi].
std::optional<std::uint64_t> parse_number(std::string_view text, std::size_t max_digits, std::uint64_t lo,
                                          std::uint64_t hi) {
    if (text.empty() || text.size() > max_digits) return std::nullopt;
    if (!std::all_of(text.begin(), text.end(), is_digit)) return std::nullopt;
    std::uint64_t value = 0;
    std::from_chars(text.data(), text.data() + text.size(), value);
    if (value < lo || value > hi) return std::nullopt;
    return value;
}

/// `"..."` at the start of text; returns the inner string and advances past it.
std::optional<std::string_view> take_quoted(std::string_view& text) {
    if (text.size() < 2 || text.front() != '"') return std::nullopt;
    auto close = text.find('"', 1);
    if (close == std::string_view::npos) return std::nullopt;
    auto inner = text.substr(1, close - 1);
    text.remove_prefix(close + 1);
    return inner;
}

AtCommand parse_sms_body(std::string_view unit) {
    const std::string_view text = unit.substr(0, unit.size() - 1);
    if (text.size() > kMaxSmsBody) {
        throw ParseError({kMaxSmsBody, text.size() - kMaxSmsBody}, "SMS body longer than 160 characters");
    }
    for (std::size_t i = 0; i < text.size(); ++i) {
        const auto c = static_cast<unsigned char>(text[i]);
        const bool ok = (c >= 0x20 && c <= 0x7E) || c == '\r' || c == '\n';
        if (!ok) throw ParseError({i, 1}, "SMS body byte outside printable ASCII");
    }
    return SmsBody{std::string(text)};
}

}  // namespace

bool valid_sms_destination(std::string_view number) noexcept {
    if (number.size() < 8 || number.size() > 16 || number.front() != '+') return false;
    return std::all_of(number.begin() + 1, number.end(), is_digit);
}

AtCommand parse_at(std::string_view unit) {
    if (unit.empty()) throw ParseError({0, 0}, "empty input");
    if (unit.back() == kCtrlZ) return parse_sms_body(unit);
    if (unit.back() != '\r') throw ParseError({unit.size(), 0}, "missing CR terminator");

    const std::string_view line = unit.substr(0, unit.size() - 1);
    if (line.size() > kMaxAtLine) throw ParseError({kMaxAtLine, line.size() - kMaxAtLine}, "line too long");
    for (std::size_t i = 0; i < line.size(); ++i) {
        const auto c = static_cast<unsigned char>(line[i]);
        if (c < 0x20 || c > 0x7E) throw ParseError({i, 1}, "control byte in command line");
    }
    if (line.size() < 2 || std::toupper(static_cast<unsigned char>(line[0])) != 'A' ||
        std::toupper(static_cast<unsigned char>(line[1])) != 'T') {
        throw ParseError({0, std::min<std::size_t>(line.size(), 2)}, "command must start with AT");
    }
    if (line.size() == 2) return Attention{};
    if (line[2] != '+') throw ParseError({2, line.size() - 2}, "unknown command");

    const std::size_t head_end = std::min(line.find_first_of("=?", 3), line.size());
    std::string head(line.substr(3, head_end - 3));
    std::transform(head.begin(), head.end(), head.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    const ByteSpan head_span{0, head_end};
    std::string_view rest = line.substr(head_end);
    const std::size_t arg_offset = head_end + 1;

    auto need_assignment = [&] {
        if (rest.empty() || rest.front() != '=') throw ParseError({head_end, rest.size()}, "expected '='");
        rest.remove_prefix(1);
    };
    auto bad_argument = [&](const std::string& what) -> ParseError {
        return ParseError({arg_offset, line.size() - std::min(line.size(), arg_offset)}, what);
    };

    if (head == "CMGF") {
        need_assignment();
        if (rest == "1") return SetTextMode{true};
        if (rest == "0") return SetTextMode{false};
        throw bad_argument("CMGF argument must be 0 or 1");
    }
    if (head == "CMGS") {
        need_assignment();
        auto dest = take_quoted(rest);
        if (!dest || !rest.empty() || !valid_sms_destination(*dest)) {
            throw bad_argument("destination must be \"+\" followed by 7-15 digits");
        }
        return SendSms{std::string(*dest)};
    }
    if (head == "CREG") {
        if (rest != "?") throw ParseError({head_end, rest.size()}, "only AT+CREG? is supported");
        return RegistrationQuery{};
    }
    if (head == "CIPSTART") {
        need_assignment();
        auto host = take_quoted(rest);
        if (!host || host->empty() || host->size() > 253 || !std::all_of(host->begin(), host->end(), valid_host_char)) {
            throw bad_argument("malformed host");
        }
        if (rest.empty() || rest.front() != ',') throw bad_argument("expected ',<port>'");
        rest.remove_prefix(1);
        auto port = parse_number(rest, 5, 1, 65535);
        if (!port) throw bad_argument("port must be 1-65535");
        return DataOpen{std::string(*host), static_cast<std::uint16_t>(*port)};
    }
    if (head == "CIPSEND") {
        need_assignment();
        auto length = parse_number(rest, 4, 1, kMaxCipSend);
        if (!length) throw bad_argument("CIPSEND length must be 1-1460");
        return DataSend{static_cast<std::size_t>(*length)};
    }
    if (head == "CIPCLOSE") {
        if (!rest.empty()) throw ParseError({head_end, rest.size()}, "AT+CIPCLOSE takes no arguments");
        return DataClose{};
    }
    throw ParseError(head_span, "unknown command head");
}

DataPayload parse_payload(std::string_view bytes, std::size_t expected_length) {
    if (bytes.size() != expected_length) {
        throw ParseError({0, bytes.size()}, "payload length " + std::to_string(bytes.size()) + " != announced " +
                                                std::to_string(expected_length));
    }
    return DataPayload{std::string(bytes)};
}

std::string serialize_command(const AtCommand& command) {
    return std::visit(
        Overloaded{
            [](const Attention&) { return std::string("AT\r"); },
            [](const SetTextMode& c) { return std::string(c.enabled ? "AT+CMGF=1\r" : "AT+CMGF=0\r"); },
            [](const SendSms& c) { return "AT+CMGS=\"" + c.destination + "\"\r"; },
            [](const SmsBody& c) { return c.text + kCtrlZ; },
            [](const RegistrationQuery&) { return std::string("AT+CREG?\r"); },
            [](const DataOpen& c) { return "AT+CIPSTART=\"" + c.host + "\"," + std::to_string(c.port) + "\r"; },
            [](const DataSend& c) { return "AT+CIPSEND=" + std::to_string(c.length) + "\r"; },
            [](const DataPayload& c) { return c.bytes; },
            [](const DataClose&) { return std::string("AT+CIPCLOSE\r"); },
        },
        command);
}

std::string serialize_response(const AtResponse& response) {
    if (response.prompt) return "> ";
    std::string out;
    for (const auto& line : response.lines) {
        out += "\r\n";
        out += line;
        out += "\r\n";
    }
    return out;
}

std::pair<ModemState, AtResponse> execute(ModemState state, const AtCommand& command, std::int64_t now_ms) {
    // An interrupted SMS or CIPSEND is abandoned by any other command.
    const bool is_body = std::holds_alternative<SmsBody>(command);
    const bool is_payload = std::holds_alternative<DataPayload>(command);
    if (state.awaiting_body && !is_body) {
        state.awaiting_body.reset();
        return {std::move(state), AtResponse::error()};
    }
    if (state.awaiting_payload && !is_payload) {
        state.awaiting_payload.reset();
        return {std::move(state), AtResponse::error()};
    }

    AtResponse response = std::visit(
        Overloaded{
            [](const Attention&) { return AtResponse::ok(); },
            [&](const SetTextMode& c) {
                if (!c.enabled) return AtResponse::error();
                state.text_mode = true;
                return AtResponse::ok();
            },
            [&](const SendSms& c) {
                if (!state.text_mode) return AtResponse::cms_error(305);
                state.awaiting_body = c.destination;
                return AtResponse::input_prompt();
            },
            [&](const SmsBody& c) {
                if (!state.awaiting_body) return AtResponse::error();
                state.sms_counter += 1;
                state.outbox.push_back(SmsMessage{*state.awaiting_body, c.text, now_ms, state.sms_counter});
                state.awaiting_body.reset();
                return AtResponse::cmgs(state.sms_counter);
            },
            [](const RegistrationQuery&) { return AtResponse{{"+CREG: 0,1", "OK"}, false}; },
            [&](const DataOpen& c) {
                if (state.data_channel) return AtResponse::error();
                state.data_channel = DataEndpoint{c.host, c.port};
                return AtResponse{{"CONNECT"}, false};
            },
            [&](const DataSend& c) {
                if (!state.data_channel) return AtResponse::error();
                state.awaiting_payload = c.length;
                return AtResponse::input_prompt();
            },
            [&](const DataPayload& c) {
                if (!state.awaiting_payload || *state.awaiting_payload != c.bytes.size()) {
                    state.awaiting_payload.reset();
                    return AtResponse::error();
                }
                state.awaiting_payload.reset();
                return AtResponse{{"SEND OK"}, false};
            },
            [&](const DataClose&) {
                if (!state.data_channel) return AtResponse::error();
                state.data_channel.reset();
                return AtResponse{{"CLOSED"}, false};
            },
        },
        command);
    return {std::move(state), std::move(response)};
}

AtResponse Modem::execute(const AtCommand& command, std::int64_t now_ms) {
    if (const auto* open = std::get_if<DataOpen>(&command); open && !state_.awaiting_body &&
                                                            !state_.awaiting_payload && !state_.data_channel) {
        if (!link_ || !link_->open(open->host, open->port)) return AtResponse{{"CONNECT FAIL"}, false};
    }

    auto [next, response] = gasguard::execute(std::move(state_), command, now_ms);
    state_ = std::move(next);

    if (const auto* payload = std::get_if<DataPayload>(&command); payload && response.lines == std::vector<std::string>{"SEND OK"}) {
        last_peer_reply_ = link_ ? link_->send(payload->bytes) : std::nullopt;
        if (!last_peer_reply_) {
            // Transport dropped underneath us.
            if (link_) link_->close();
            state_.data_channel.reset();
            response = AtResponse{{"SEND FAIL", "CLOSED"}, false};
        }
    } else if (std::holds_alternative<DataClose>(command) && response == AtResponse{{"CLOSED"}, false}) {
        if (link_) link_->close();
    }
    return response;
}

void Modem::dispatch(std::string_view unit, std::int64_t now_ms, std::string& out) {
    AtResponse response;
    try {
        if (state_.awaiting_payload) {
            response = execute(parse_payload(unit, *state_.awaiting_payload), now_ms);
        } else {
            response = execute(parse_at(unit), now_ms);
        }
    } catch (const ParseError&) {
        // A malformed body still ends the compose; same for a payload.
        state_.awaiting_body.reset();
        state_.awaiting_payload.reset();
        response = AtResponse::error();
    }
    std::string bytes = serialize_response(response);
    if (transcript_) transcript_("<<", bytes);
    out += bytes;
}

std::string Modem::feed(std::string_view bytes, std::int64_t now_ms) {
    if (transcript_ && !bytes.empty()) transcript_(">>", bytes);
    std::string out;
    for (char c : bytes) {
        if (state_.awaiting_payload) {
            pending_ += c;
            if (pending_.size() == *state_.awaiting_payload) {
                dispatch(pending_, now_ms, out);
                pending_.clear();
            }
            continue;
        }
        const char terminator = state_.awaiting_body ? kCtrlZ : '\r';
        if (c == '\n' && pending_.empty() && !state_.awaiting_body) continue;  // LF after CR
        if (discard_until_) {
            if (c == *discard_until_) discard_until_.reset();
            continue;
        }
        pending_ += c;
        if (c == terminator) {
            dispatch(pending_, now_ms, out);
            pending_.clear();
        } else if (pending_.size() > kMaxAtLine + kMaxSmsBody) {
            // Runaway input: drop it up to the next terminator.
            pending_.clear();
            discard_until_ = terminator;
            state_.awaiting_body.reset();
            std::string bytes_out = serialize_response(AtResponse::error());
            if (transcript_) transcript_("<<", bytes_out);
            out += bytes_out;
        }
    }
    return out;
}

TransmitResult Modem::transmit_telemetry(const TelemetryRecord& record, std::int64_t now_ms) {
    if (!state_.data_channel) throw DeliveryError("data channel closed");
    const std::string frame = encode_frame(record);

    const std::string prompt = feed(serialize_command(DataSend{frame.size()}), now_ms);
    if (prompt != "> ") throw DeliveryError("CIPSEND refused: " + prompt);

    last_peer_reply_.reset();
    const std::string sent = feed(frame, now_ms);
    if (sent != serialize_response(AtResponse{{"SEND OK"}, false}) || !last_peer_reply_) {
        throw DeliveryError("send failed");
    }
    TransmitResult result;
    result.reply = *last_peer_reply_;
    result.ack = result.reply == "ACK " + std::to_string(record.seq);
    return result;
}

}  // namespace gasguard
