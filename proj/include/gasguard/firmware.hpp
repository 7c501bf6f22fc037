#pragma once

// Control loop of the detector unit. tick() is a pure function: it returns the
// next state plus the effects (LCD, buzzer, LED, SMS, telemetry) the hardware
// layer should perform, in a fixed order.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gasguard/gas.hpp"
#include "gasguard/sensor_model.hpp"
#include "gasguard/sms.hpp"
#include "gasguard/telemetry.hpp"

namespace gasguard {

inline constexpr std::size_t kLcdWidth = 16;

/// Per-gas alarm thresholds in ppm. LPG 1000 and Propane 10000 are the
/// documented alarm levels; Methane 5000 and Butane 1000 are local defaults.
struct ThresholdTable {
    std::array<double, 4> threshold_ppm{1000.0, 10000.0, 5000.0, 1000.0};
    double hysteresis_fraction = 0.1;
    int raise_count = 3;  // consecutive Over verdicts to raise
    int clear_count = 5;  // consecutive UnderClear verdicts to clear

    double threshold(GasSpecies gas) const { return threshold_ppm[index_of(gas)]; }
    double clear_level(GasSpecies gas) const { return (1.0 - hysteresis_fraction) * threshold(gas); }

    void validate() const;
};

enum class Verdict { Over, UnderClear, InBand };

enum class AlarmState { Normal, Pending, Alarmed, Clearing };

std::string_view to_string(Verdict v) noexcept;
std::string_view to_string(AlarmState s) noexcept;

struct AlarmFsm {
    AlarmState state = AlarmState::Normal;
    int over_count = 0;
    int under_count = 0;
    std::optional<std::int64_t> latched_since_ms;

    bool latched() const noexcept {
        return state == AlarmState::Alarmed || state == AlarmState::Clearing;
    }

    friend bool operator==(const AlarmFsm&, const AlarmFsm&) = default;
};

struct FsmStep {
    AlarmFsm fsm;
    bool raised = false;
    bool cleared = false;
};

using LcdLines = std::pair<std::string, std::string>;

struct FirmwareConfig {
    ThresholdTable table;
    std::string device_id = "gasguard-01";
    std::string emergency_number;  // empty means not configured
    std::int64_t sms_repeat_ms = 30000;

    void validate() const;
};

struct FirmwareState {
    AlarmFsm fsm;
    GasSpecies active_gas = GasSpecies::LPG;
    // Reconstructed from the ADC code: true_ppm holds the firmware's estimate,
    // since the controller never sees the real concentration.
    std::optional<SensorReading> last_reading;
    double last_estimate_ppm = 0.0;
    std::uint64_t seq = 0;    // sequence number of the most recent tick
    std::uint64_t ticks = 0;  // ticks executed so far
    bool buzzer_on = false;
    bool led_on = false;
    LcdLines lcd{std::string(kLcdWidth, ' '), std::string(kLcdWidth, ' ')};
    std::optional<std::int64_t> last_sms_ms;
    std::optional<std::int64_t> last_tick_ms;

    explicit FirmwareState(GasSpecies gas = GasSpecies::LPG) : active_gas(gas) {}
};

struct BuzzerSet { bool on; friend bool operator==(const BuzzerSet&, const BuzzerSet&) = default; };
struct LedSet { bool on; friend bool operator==(const LedSet&, const LedSet&) = default; };
struct LcdSet { LcdLines lines; friend bool operator==(const LcdSet&, const LcdSet&) = default; };
struct SmsSend { SmsMessage message; friend bool operator==(const SmsSend&, const SmsSend&) = default; };
struct TelemetryEmit { TelemetryRecord record; friend bool operator==(const TelemetryEmit&, const TelemetryEmit&) = default; };

using Effect = std::variant<BuzzerSet, LedSet, LcdSet, SmsSend, TelemetryEmit>;

/// One-line, stable textual form used in event logs.
std::string describe(const Effect& effect);

Verdict evaluate_threshold(double estimate_ppm, GasSpecies gas, const ThresholdTable& table);

FsmStep fsm_step(const AlarmFsm& fsm, Verdict verdict, std::int64_t now_ms, const ThresholdTable& table);

/// Normal/Pending show the gas and estimate; Alarmed/Clearing show the leak
/// message. Both lines are exactly kLcdWidth characters.
LcdLines render_lcd(const FirmwareState& state);

/// Throws ConfigError when no emergency number is configured.
SmsMessage compose_sms(GasSpecies gas, std::int64_t now_ms, const FirmwareConfig& config);

TelemetryRecord compose_telemetry(const FirmwareState& state, const SensorReading& reading,
                                  std::int64_t now_ms, const FirmwareConfig& config);

struct TickResult {
    FirmwareState state;
    std::vector<Effect> effects;
};

/// Throws UsageError if now_ms goes backwards.
TickResult tick(const FirmwareState& state, std::uint32_t adc_code, std::int64_t now_ms,
                const FirmwareConfig& config, const SensorModel& model);

}  // namespace gasguard
