#include "gasguard/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gasguard/error.hpp"

namespace gasguard {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

template <class T>
T parse_value(const std::string& text, std::size_t line, const std::string& field) {
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw LoadError(line, field, "invalid number '" + text + "'");
    }
    if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(value)) throw LoadError(line, field, "number must be finite");
    }
    return value;
}

std::optional<GasSpecies> gas_from_key(std::string_view suffix) {
    for (GasSpecies gas : kAllGases) {
        std::string name(to_string(gas));
        std::string lower = name;
        std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
        if (suffix == name || suffix == lower) return gas;
    }
    return std::nullopt;
}

std::string fmt_fixed(double value, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, value);
    return buf;
}

std::string escape_bytes(std::string_view bytes) {
    std::string out;
    for (char c : bytes) {
        switch (c) {
            case '\r': out += "\\r"; break;
            case '\n': out += "\\n"; break;
            case kCtrlZ: out += "\\x1A"; break;
            case '\\': out += "\\\\"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20 || static_cast<unsigned char>(c) > 0x7E) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\x%02X", static_cast<unsigned char>(c));
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

template <class... Fs>
struct Overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

}  // namespace

std::string_view to_string(SegmentShape shape) noexcept {
    switch (shape) {
        case SegmentShape::Hold: return "hold";
        case SegmentShape::Linear: return "linear";
        case SegmentShape::Exponential: return "exponential";
    }
    return "?";
}

void Scenario::validate() const {
    if (!valid_device_id(device_id)) throw LoadError(0, "device", "device id must be 1-32 chars of [A-Za-z0-9_-]");
    if (sample_period_ms <= 0) throw LoadError(0, "period_ms", "must be positive");
    if (duration_ms <= 0) throw LoadError(0, "duration_ms", "must be positive");
    if (!(noise_sigma_ppm >= 0.0)) throw LoadError(0, "sigma_ppm", "must be non-negative");
    if (segments.empty()) throw LoadError(0, "segment", "at least one segment is required");
    std::int64_t cursor = 0;
    for (const Segment& s : segments) {
        if (s.end_ms <= s.start_ms) throw LoadError(0, "segment", "end_ms must exceed start_ms");
        if (s.start_ms > cursor) throw LoadError(0, "segment", "gap before " + std::to_string(s.start_ms) + " ms");
        if (s.start_ms < cursor) throw LoadError(0, "segment", "overlap at " + std::to_string(s.start_ms) + " ms");
        cursor = s.end_ms;
    }
    if (cursor < duration_ms) throw LoadError(0, "segment", "segments end before duration_ms (gap)");
    if (cursor > duration_ms) throw LoadError(0, "segment", "segments extend past duration_ms (overlap)");
    try {
        model.validate();
        firmware.validate();
    } catch (const ConfigError& e) {
        throw LoadError(0, "", e.what());
    }
}

Scenario load_scenario(std::string_view text) {
    Scenario sc;
    sc.firmware.emergency_number = kDefaultEmergencyNumber;
    std::set<std::string> seen;
    bool have_device = false, have_gas = false, have_duration = false;
    std::int64_t cursor = 0;

    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw.substr(0, raw.find('#')));
        if (line.empty()) continue;

        if (line.rfind("segment", 0) == 0 && (line.size() == 7 || line[7] == ' ' || line[7] == '\t')) {
            const auto words = split_ws(line);
            if (words.size() != 6) {
                throw LoadError(line_no, "segment", "expected: segment <start_ms> <end_ms> <shape> <start_ppm> <end_ppm>");
            }
            Segment s;
            s.start_ms = parse_value<std::int64_t>(words[1], line_no, "segment.start_ms");
            s.end_ms = parse_value<std::int64_t>(words[2], line_no, "segment.end_ms");
            if (words[3] == "hold") s.shape = SegmentShape::Hold;
            else if (words[3] == "linear") s.shape = SegmentShape::Linear;
            else if (words[3] == "exponential") s.shape = SegmentShape::Exponential;
            else throw LoadError(line_no, "segment.shape", "unknown shape '" + words[3] + "'");
            s.start_ppm = parse_value<double>(words[4], line_no, "segment.start_ppm");
            s.end_ppm = parse_value<double>(words[5], line_no, "segment.end_ppm");

            if (s.end_ms <= s.start_ms) throw LoadError(line_no, "segment", "end_ms must exceed start_ms");
            if (s.start_ppm < 0 || s.end_ppm < 0) throw LoadError(line_no, "segment", "negative ppm");
            if (s.shape == SegmentShape::Hold && s.end_ppm != s.start_ppm) {
                throw LoadError(line_no, "segment", "hold segment needs start_ppm == end_ppm");
            }
            if (s.shape == SegmentShape::Exponential && (s.start_ppm <= 0 || s.end_ppm <= 0)) {
                throw LoadError(line_no, "segment", "exponential segment needs positive ppm at both ends");
            }
            if (s.start_ms > cursor) {
                throw LoadError(line_no, "segment", "gap: segment starts at " + std::to_string(s.start_ms) +
                                                        " ms, previous coverage ends at " + std::to_string(cursor));
            }
            if (s.start_ms < cursor) {
                throw LoadError(line_no, "segment", "overlap: segment starts at " + std::to_string(s.start_ms) +
                                                        " ms, previous coverage ends at " + std::to_string(cursor));
            }
            cursor = s.end_ms;
            sc.segments.push_back(s);
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) throw LoadError(line_no, "", "expected key=value or a segment line");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!seen.insert(key).second) throw LoadError(line_no, key, "duplicate key");

        if (key == "device") {
            if (!valid_device_id(value)) throw LoadError(line_no, key, "device id must be 1-32 chars of [A-Za-z0-9_-]");
            sc.device_id = value;
            have_device = true;
        } else if (key == "gas") {
            auto gas = gas_from_string(value);
            if (!gas) throw LoadError(line_no, key, "unknown gas '" + value + "'");
            sc.active_gas = *gas;
            have_gas = true;
        } else if (key == "period_ms") {
            sc.sample_period_ms = parse_value<std::int64_t>(value, line_no, key);
            if (sc.sample_period_ms <= 0) throw LoadError(line_no, key, "must be positive");
        } else if (key == "duration_ms") {
            sc.duration_ms = parse_value<std::int64_t>(value, line_no, key);
            if (sc.duration_ms <= 0) throw LoadError(line_no, key, "must be positive");
            have_duration = true;
        } else if (key == "sigma_ppm") {
            sc.noise_sigma_ppm = parse_value<double>(value, line_no, key);
            if (sc.noise_sigma_ppm < 0) throw LoadError(line_no, key, "must be non-negative");
        } else if (key == "seed") {
            sc.rng_seed = parse_value<std::uint64_t>(value, line_no, key);
        } else if (key == "emergency") {
            sc.firmware.emergency_number = value;
        } else if (key == "sms_repeat_ms") {
            sc.firmware.sms_repeat_ms = parse_value<std::int64_t>(value, line_no, key);
        } else if (key == "hysteresis") {
            sc.firmware.table.hysteresis_fraction = parse_value<double>(value, line_no, key);
        } else if (key == "raise_count") {
            sc.firmware.table.raise_count = parse_value<int>(value, line_no, key);
        } else if (key == "clear_count") {
            sc.firmware.table.clear_count = parse_value<int>(value, line_no, key);
        } else if (key.rfind("threshold.", 0) == 0 || key.rfind("slope.", 0) == 0) {
            const auto dot = key.find('.');
            auto gas = gas_from_key(std::string_view(key).substr(dot + 1));
            if (!gas) throw LoadError(line_no, key, "unknown gas in key");
            const double v = parse_value<double>(value, line_no, key);
            if (key[0] == 't') sc.firmware.table.threshold_ppm[index_of(*gas)] = v;
            else sc.model.curve(*gas).slope = v;
        } else if (key == "r0") {
            sc.model.r0 = parse_value<double>(value, line_no, key);
        } else if (key == "rl") {
            sc.model.rl = parse_value<double>(value, line_no, key);
        } else if (key == "vc") {
            sc.model.vc = parse_value<double>(value, line_no, key);
        } else if (key == "vref") {
            sc.model.vref = parse_value<double>(value, line_no, key);
        } else if (key == "adc_bits") {
            sc.model.adc_bits = parse_value<int>(value, line_no, key);
        } else {
            throw LoadError(line_no, key, "unknown key");
        }
    }

    if (!have_device) throw LoadError(0, "device", "missing required field");
    if (!have_gas) throw LoadError(0, "gas", "missing required field");
    if (!have_duration) throw LoadError(0, "duration_ms", "missing required field");
    sc.firmware.device_id = sc.device_id;
    sc.validate();
    return sc;
}

Scenario load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError(0, "", "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_scenario(buf.str());
}

double tick_noise(std::uint64_t seed, std::uint64_t tick_index) {
    std::mt19937_64 gen(seed ^ tick_index);
    constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
    const double u1 = static_cast<double>((gen() >> 11) + 1) * kScale;  // (0, 1]
    const double u2 = static_cast<double>(gen() >> 11) * kScale;        // [0, 1)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double trajectory_at(const Scenario& scenario, std::int64_t t_ms) {
    if (t_ms < 0 || t_ms >= scenario.duration_ms) {
        throw UsageError("t=" + std::to_string(t_ms) + " ms outside scenario duration");
    }
    auto it = std::upper_bound(scenario.segments.begin(), scenario.segments.end(), t_ms,
                               [](std::int64_t t, const Segment& s) { return t < s.end_ms; });
    const Segment& s = *it;
    const double frac = static_cast<double>(t_ms - s.start_ms) / static_cast<double>(s.end_ms - s.start_ms);
    switch (s.shape) {
        case SegmentShape::Hold: return s.start_ppm;
        case SegmentShape::Linear: return s.start_ppm + (s.end_ppm - s.start_ppm) * frac;
        case SegmentShape::Exponential: return s.start_ppm * std::pow(s.end_ppm / s.start_ppm, frac);
    }
    return s.start_ppm;
}

double concentration_at(const Scenario& scenario, std::int64_t t_ms, std::uint64_t tick_index) {
    double ppm = trajectory_at(scenario, t_ms);
    if (scenario.noise_sigma_ppm > 0.0) ppm += scenario.noise_sigma_ppm * tick_noise(scenario.rng_seed, tick_index);
    return std::max(0.0, ppm);
}

std::string RunResult::event_log_text() const {
    std::string out;
    for (const auto& line : event_log) {
        out += line;
        out += '\n';
    }
    return out;
}

namespace {

class Harness {
public:
    Harness(const Scenario& scenario, const RunOptions& options) : sc_(scenario), options_(options) {
        if (options.remote) {
            link_ = std::make_unique<TcpDataLink>();
            endpoint_ = DataEndpoint{options.remote->host, options.remote->port};
        } else {
            if (!options.store) owned_store_ = std::make_unique<TelemetryStore>();
            link_ = std::make_unique<InProcessDataLink>(options.store ? *options.store : *owned_store_);
            endpoint_ = DataEndpoint{"gateway.inproc", 7878};
        }
        modem_ = std::make_unique<Modem>(link_.get());
        modem_->set_transcript([this](std::string_view dir, std::string_view bytes) {
            log("modem " + std::string(dir) + " " + escape_bytes(bytes));
        });
    }

    RunResult run() {
        sc_.validate();
        now_ = 0;
        log("scenario device=" + sc_.device_id + " gas=" + std::string(to_string(sc_.active_gas)) +
            " period_ms=" + std::to_string(sc_.sample_period_ms) + " duration_ms=" +
            std::to_string(sc_.duration_ms) + " seed=" + std::to_string(sc_.rng_seed));
        modem_->feed(serialize_command(Attention{}), now_);
        modem_->feed(serialize_command(SetTextMode{true}), now_);
        if (!connect()) throw StartupError("gateway unreachable at " + endpoint_.host + ":" + std::to_string(endpoint_.port));

        FirmwareState state(sc_.active_gas);
        std::optional<std::int64_t> first_over_ms;
        for (std::uint64_t k = 0;; ++k) {
            const std::int64_t t = static_cast<std::int64_t>(k) * sc_.sample_period_ms;
            if (t >= sc_.duration_ms) break;
            now_ = t;
            manage_channel(t);

            const double ppm = concentration_at(sc_, t, k);
            const SensorReading reading = sample(ppm, sc_.active_gas, sc_.model, t);
            TickResult step = tick(state, reading.adc_code, t, sc_.firmware, sc_.model);

            TickTrace trace;
            trace.t_ms = t;
            trace.true_ppm = ppm;
            trace.adc_code = reading.adc_code;
            trace.estimate_ppm = step.state.last_estimate_ppm;
            trace.verdict = evaluate_threshold(trace.estimate_ppm, sc_.active_gas, sc_.firmware.table);
            trace.state = step.state.fsm.state;
            trace.raised = !state.fsm.latched() && step.state.fsm.latched();
            result_.trace.push_back(trace);

            log("tick " + std::to_string(k) + " true_ppm=" + fmt_fixed(ppm, 3) + " adc=" +
                std::to_string(reading.adc_code) + " est_ppm=" + fmt_fixed(trace.estimate_ppm, 3) + " verdict=" +
                std::string(to_string(trace.verdict)) + " fsm=" + std::string(to_string(trace.state)) +
                (trace.raised ? " RAISED" : ""));

            if (trace.verdict == Verdict::Over && !first_over_ms) first_over_ms = t;
            if (trace.raised && !result_.report.first_alarm_ms) {
                result_.report.first_alarm_ms = t;
                result_.report.alarm_latency_ms = t - first_over_ms.value_or(t);
            }

            for (const Effect& effect : step.effects) {
                log("effect " + describe(effect));
                std::visit(Overloaded{
                               [&](const SmsSend& e) { send_sms(e.message); },
                               [&](const TelemetryEmit& e) {
                                   ++result_.telemetry_emitted;
                                   pending_.push_back(e.record);
                               },
                               [](const auto&) {},
                           },
                           effect);
                result_.effects.push_back(effect);
            }
            flush_telemetry();
            if (options_.on_tick) options_.on_tick(trace);
            state = std::move(step.state);
            ++result_.report.ticks;
        }

        result_.outbox = modem_->outbox_snapshot();
        result_.report.sms_sent = result_.outbox.size();
        result_.report.final_alarmed = state.fsm.latched();
        result_.telemetry_retained = pending_.size();
        log("end ticks=" + std::to_string(result_.report.ticks) + " sms=" + std::to_string(result_.report.sms_sent) +
            " persisted=" + std::to_string(result_.report.records_persisted) +
            " retained=" + std::to_string(result_.telemetry_retained));
        return std::move(result_);
    }

private:
    void log(std::string line) {
        result_.event_log.push_back("t=" + std::to_string(now_) + " " + line);
    }

    bool connect() {
        const std::string reply = modem_->feed(serialize_command(DataOpen{endpoint_.host, endpoint_.port}), now_);
        return modem_->state().data_channel.has_value();
    }

    bool in_outage(std::int64_t t) const {
        return std::any_of(options_.channel_outages.begin(), options_.channel_outages.end(),
                           [t](const auto& w) { return t >= w.first && t < w.second; });
    }

    void manage_channel(std::int64_t t) {
        const bool open = modem_->state().data_channel.has_value();
        if (in_outage(t)) {
            if (open) modem_->feed(serialize_command(DataClose{}), now_);
        } else if (!open) {
            connect();
        }
    }

    void send_sms(const SmsMessage& message) {
        const std::string prompt = modem_->feed(serialize_command(SendSms{message.destination}), now_);
        if (prompt != "> ") {
            log("sms refused");
            return;
        }
        modem_->feed(serialize_command(SmsBody{message.body}), now_);
    }

    void flush_telemetry() {
        while (!pending_.empty()) {
            const TelemetryRecord& record = pending_.front();
            TransmitResult sent;
            try {
                sent = modem_->transmit_telemetry(record, now_);
            } catch (const DeliveryError& e) {
                log("telemetry retained queued=" + std::to_string(pending_.size()) + " (" + e.what() + ")");
                return;
            }
            log("gateway " + sent.reply);
            if (sent.ack) ++result_.report.records_persisted;
            pending_.erase(pending_.begin());
        }
    }

    Scenario sc_;
    RunOptions options_;
    std::unique_ptr<TelemetryStore> owned_store_;
    std::unique_ptr<DataLink> link_;
    std::unique_ptr<Modem> modem_;
    DataEndpoint endpoint_;
    std::vector<TelemetryRecord> pending_;
    RunResult result_;
    std::int64_t now_ = 0;
};

}  // namespace

RunResult run(const Scenario& scenario, const RunOptions& options) {
    Harness harness(scenario, options);
    return harness.run();
}

std::string render_report(const RunReport& report, ReportFormat format) {
    if (format == ReportFormat::Machine) {
        nlohmann::ordered_json j;
        j["ticks"] = report.ticks;
        j["first_alarm_ms"] = report.first_alarm_ms ? nlohmann::ordered_json(*report.first_alarm_ms) : nullptr;
        j["alarm_latency_ms"] = report.alarm_latency_ms ? nlohmann::ordered_json(*report.alarm_latency_ms) : nullptr;
        j["sms_sent"] = report.sms_sent;
        j["records_persisted"] = report.records_persisted;
        j["final_state"] = report.final_alarmed ? "Alarmed" : "Normal";
        return j.dump() + "\n";
    }
    auto ms = [](const std::optional<std::int64_t>& v) { return v ? std::to_string(*v) + " ms" : std::string("none"); };
    std::string out;
    out += "ticks: " + std::to_string(report.ticks) + "\n";
    out += "first_alarm: " + ms(report.first_alarm_ms) + "\n";
    out += "alarm_latency: " + ms(report.alarm_latency_ms) + "\n";
    out += "sms_sent: " + std::to_string(report.sms_sent) + "\n";
    out += "records_persisted: " + std::to_string(report.records_persisted) + "\n";
    out += std::string("final_state: ") + (report.final_alarmed ? "Alarmed" : "Normal") + "\n";
    return out;
}

RunReport parse_report(std::string_view machine) {
    const auto j = nlohmann::json::parse(machine.begin(), machine.end(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw UsageError("report is not a JSON object");
    try {
        RunReport r;
        r.ticks = j.at("ticks").get<std::uint64_t>();
        if (!j.at("first_alarm_ms").is_null()) r.first_alarm_ms = j.at("first_alarm_ms").get<std::int64_t>();
        if (!j.at("alarm_latency_ms").is_null()) r.alarm_latency_ms = j.at("alarm_latency_ms").get<std::int64_t>();
        r.sms_sent = j.at("sms_sent").get<std::uint64_t>();
        r.records_persisted = j.at("records_persisted").get<std::uint64_t>();
        const auto state = j.at("final_state").get<std::string>();
        if (state != "Alarmed" && state != "Normal") throw UsageError("bad final_state");
        r.final_alarmed = state == "Alarmed";
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("malformed report: ") + e.what());
    }
}

}  // namespace gasguard
