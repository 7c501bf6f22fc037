#include "gasguard/firmware.hpp"

#include <cmath>
#include <limits>

#include "gasguard/error.hpp"

namespace gasguard {

namespace {

std::string fit(std::string line) {
    line.resize(kLcdWidth, ' ');
    return line;
}

bool valid_destination(const std::string& number) {
    if (number.size() < 8 || number.size() > 16 || number.front() != '+') return false;
    for (std::size_t i = 1; i < number.size(); ++i) {
        if (number[i] < '0' || number[i] > '9') return false;
    }
    return true;
}

template <class... Fs>
struct Overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

}  // namespace

void ThresholdTable::validate() const {
    for (GasSpecies gas : kAllGases) {
        if (!(threshold(gas) > 0.0)) throw ConfigError(std::string(to_string(gas)) + " threshold must be positive");
    }
    if (!(hysteresis_fraction > 0.0 && hysteresis_fraction < 1.0)) {
        throw ConfigError("hysteresis_fraction must be in (0, 1)");
    }
    if (raise_count < 1) throw ConfigError("raise_count must be >= 1");
    if (clear_count < 1) throw ConfigError("clear_count must be >= 1");
}

void FirmwareConfig::validate() const {
    table.validate();
    if (!valid_device_id(device_id)) throw ConfigError("invalid device_id '" + device_id + "'");
    if (!emergency_number.empty() && !valid_destination(emergency_number)) {
        throw ConfigError("emergency number must be '+' followed by 7-15 digits");
    }
    if (sms_repeat_ms <= 0) throw ConfigError("sms_repeat_ms must be positive");
}

std::string_view to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::Over: return "Over";
        case Verdict::UnderClear: return "UnderClear";
        case Verdict::InBand: return "InBand";
    }
    return "?";
}

std::string_view to_string(AlarmState s) noexcept {
    switch (s) {
        case AlarmState::Normal: return "Normal";
        case AlarmState::Pending: return "Pending";
        case AlarmState::Alarmed: return "Alarmed";
        case AlarmState::Clearing: return "Clearing";
    }
    return "?";
}

Verdict evaluate_threshold(double estimate_ppm, GasSpecies gas, const ThresholdTable& table) {
    if (estimate_ppm > table.threshold(gas)) return Verdict::Over;
    if (estimate_ppm < table.clear_level(gas)) return Verdict::UnderClear;
    return Verdict::InBand;
}

FsmStep fsm_step(const AlarmFsm& fsm, Verdict verdict, std::int64_t now_ms, const ThresholdTable& table) {
    FsmStep out;
    AlarmFsm& next = out.fsm;
    next = fsm;

    auto raise = [&] {
        next = AlarmFsm{AlarmState::Alarmed, 0, 0, now_ms};
        out.raised = true;
    };
    auto clear = [&] {
        next = AlarmFsm{};
        out.cleared = true;
    };

    switch (fsm.state) {
        case AlarmState::Normal:
        case AlarmState::Pending:
            if (verdict != Verdict::Over) {
                next = AlarmFsm{};
            } else if (fsm.over_count + 1 >= table.raise_count) {
                raise();
            } else {
                next = AlarmFsm{AlarmState::Pending, fsm.over_count + 1, 0, std::nullopt};
            }
            break;
        case AlarmState::Alarmed:
        case AlarmState::Clearing:
            if (verdict != Verdict::UnderClear) {
                next = AlarmFsm{AlarmState::Alarmed, 0, 0, fsm.latched_since_ms};
            } else if (fsm.under_count + 1 >= table.clear_count) {
                clear();
            } else {
                next = AlarmFsm{AlarmState::Clearing, 0, fsm.under_count + 1, fsm.latched_since_ms};
            }
            break;
    }
    return out;
}

LcdLines render_lcd(const FirmwareState& state) {
    if (state.fsm.latched()) return {fit("Gas Leakage"), fit("Detected")};

    const std::string head = std::string(to_string(state.active_gas)) + ":";
    const double estimate = state.last_estimate_ppm;
    std::string value = estimate >= 100000.0 ? std::string(".....")
                                             : std::to_string(static_cast<long long>(std::llround(estimate)));
    value += "ppm";

    // Right-align the value, keeping one trailing blank when it fits.
    std::string line1;
    if (head.size() + value.size() + 1 <= kLcdWidth) {
        line1 = head + std::string(kLcdWidth - head.size() - value.size() - 1, ' ') + value + " ";
    } else {
        line1 = head + std::string(kLcdWidth - std::min(kLcdWidth, head.size() + value.size()), ' ') + value;
    }
    const char* status = state.fsm.state == AlarmState::Pending ? "STATUS: WARNING" : "STATUS: NORMAL";
    return {fit(std::move(line1)), fit(status)};
}

SmsMessage compose_sms(GasSpecies gas, std::int64_t now_ms, const FirmwareConfig& config) {
    if (config.emergency_number.empty()) throw ConfigError("no emergency number configured");
    SmsMessage sms;
    sms.destination = config.emergency_number;
    sms.body = "EMERGENCY ALERT: " + std::string(to_string(gas)) + " gas leakage found in your home";
    sms.accepted_at_ms = now_ms;
    return sms;
}

TelemetryRecord compose_telemetry(const FirmwareState& state, const SensorReading& reading,
                                  std::int64_t now_ms, const FirmwareConfig& config) {
    TelemetryRecord r;
    r.device_id = config.device_id;
    r.seq = state.seq;
    r.timestamp_ms = now_ms;
    r.gas = state.active_gas;
    r.ppm = std::llround(state.last_estimate_ppm);
    r.adc_code = static_cast<std::int32_t>(reading.adc_code);
    r.alarm = state.fsm.latched();
    return r;
}

TickResult tick(const FirmwareState& state, std::uint32_t adc_code, std::int64_t now_ms,
                const FirmwareConfig& config, const SensorModel& model) {
    if (state.last_tick_ms && now_ms < *state.last_tick_ms) {
        throw UsageError("tick clock went backwards: " + std::to_string(now_ms) + " < " +
                         std::to_string(*state.last_tick_ms));
    }
    if (adc_code > model.full_scale_code()) throw DomainError("adc code above full scale");

    const GasSpecies gas = state.active_gas;
    double estimate;
    try {
        estimate = estimate_ppm(adc_code, gas, model);
    } catch (const SaturationError&) {
        estimate = 10.0 * model.curve(gas).ppm_max;
    }

    TickResult result{state, {}};
    FirmwareState& next = result.state;

    SensorReading seen;
    seen.timestamp_ms = now_ms;
    seen.gas = gas;
    seen.true_ppm = estimate;
    seen.vout = std::min(code_center_voltage(adc_code, model), model.vc);
    seen.rs = std::max(model.rl * (model.vc - seen.vout) / seen.vout, std::numeric_limits<double>::min());
    seen.adc_code = adc_code;

    const FsmStep step = fsm_step(state.fsm, evaluate_threshold(estimate, gas, config.table), now_ms, config.table);

    next.fsm = step.fsm;
    next.last_reading = seen;
    next.last_estimate_ppm = estimate;
    next.seq = state.ticks;
    next.ticks = state.ticks + 1;
    next.last_tick_ms = now_ms;
    next.buzzer_on = next.led_on = next.fsm.latched();
    next.lcd = render_lcd(next);

    auto& effects = result.effects;
    effects.emplace_back(LcdSet{next.lcd});
    if (next.buzzer_on != state.buzzer_on) {
        effects.emplace_back(BuzzerSet{next.buzzer_on});
        effects.emplace_back(LedSet{next.led_on});
    }
    if (next.fsm.state == AlarmState::Alarmed &&
        (!state.last_sms_ms || now_ms - *state.last_sms_ms >= config.sms_repeat_ms)) {
        effects.emplace_back(SmsSend{compose_sms(gas, now_ms, config)});
        next.last_sms_ms = now_ms;
    }

    // The wire format carries 10-bit codes.
    SensorReading wire = seen;
    if (model.adc_bits > 10) wire.adc_code >>= (model.adc_bits - 10);
    else if (model.adc_bits < 10) wire.adc_code <<= (10 - model.adc_bits);
    effects.emplace_back(TelemetryEmit{compose_telemetry(next, wire, now_ms, config)});
    return result;
}

std::string describe(const Effect& effect) {
    return std::visit(
        Overloaded{
            [](const BuzzerSet& e) { return std::string("buzzer ") + (e.on ? "on" : "off"); },
            [](const LedSet& e) { return std::string("led ") + (e.on ? "on" : "off"); },
            [](const LcdSet& e) { return "lcd [" + e.lines.first + "][" + e.lines.second + "]"; },
            [](const SmsSend& e) { return "sms to=" + e.message.destination + " body=\"" + e.message.body + "\""; },
            [](const TelemetryEmit& e) {
                std::string frame = encode_frame(e.record);
                frame.pop_back();
                return "telemetry " + frame;
            },
        },
        effect);
}

}  // namespace gasguard
