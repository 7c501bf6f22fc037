#pragma once

// Scripted leak scenarios and the deterministic harness that clocks
// firmware -> modem -> gateway.
//
// File format (one item per line, '#' comments):
//   device=<id>  gas=<LPG|Propane|Methane|Butane>  period_ms=500
//   duration_ms=<ms>  sigma_ppm=0  seed=0
//   segment <start_ms> <end_ms> <hold|linear|exponential> <start_ppm> <end_ppm>
// Optional overrides: emergency, sms_repeat_ms, hysteresis, raise_count,
// clear_count, threshold.<gas>, slope.<gas>, r0, rl, vc, vref, adc_bits.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gasguard/firmware.hpp"
#include "gasguard/gateway.hpp"
#include "gasguard/gateway_server.hpp"
#include "gasguard/sensor_model.hpp"

namespace gasguard {

enum class SegmentShape { Hold, Linear, Exponential };

std::string_view to_string(SegmentShape shape) noexcept;

struct Segment {
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    SegmentShape shape = SegmentShape::Hold;
    double start_ppm = 0.0;
    double end_ppm = 0.0;

    friend bool operator==(const Segment&, const Segment&) = default;
};

inline constexpr const char* kDefaultEmergencyNumber = "+15555550100";

struct Scenario {
    std::string device_id;
    GasSpecies active_gas = GasSpecies::LPG;
    std::int64_t sample_period_ms = 500;
    std::int64_t duration_ms = 0;
    std::vector<Segment> segments;
    double noise_sigma_ppm = 0.0;
    std::uint64_t rng_seed = 0;
    FirmwareConfig firmware;
    SensorModel model;

    /// Throws LoadError (line 0) on any broken invariant.
    void validate() const;
};

Scenario load_scenario(std::string_view text);
Scenario load_scenario_file(const std::filesystem::path& path);

/// Standard normal deviate for one tick: mt19937_64 seeded with
/// seed ^ tick_index, then Box-Muller on two 53-bit uniforms.
double tick_noise(std::uint64_t seed, std::uint64_t tick_index);

/// Noise-free trajectory value at t_ms.
double trajectory_at(const Scenario& scenario, std::int64_t t_ms);

/// Trajectory plus noise, clamped at 0. Throws UsageError outside [0, duration).
double concentration_at(const Scenario& scenario, std::int64_t t_ms, std::uint64_t tick_index);

struct RunReport {
    std::uint64_t ticks = 0;
    std::optional<std::int64_t> first_alarm_ms;
    std::optional<std::int64_t> alarm_latency_ms;  // first alarm minus first over-threshold estimate
    std::uint64_t sms_sent = 0;
    std::uint64_t records_persisted = 0;
    bool final_alarmed = false;

    friend bool operator==(const RunReport&, const RunReport&) = default;
};

struct TickTrace {
    std::int64_t t_ms = 0;
    double true_ppm = 0.0;
    std::uint32_t adc_code = 0;
    double estimate_ppm = 0.0;
    Verdict verdict = Verdict::InBand;
    AlarmState state = AlarmState::Normal;
    bool raised = false;
};

struct RunOptions {
    /// Gateway ingest address; the in-process store is used when absent.
    std::optional<ListenAddress> remote;
    /// In-process store to ingest into. A fresh volatile one when null.
    TelemetryStore* store = nullptr;
    /// [start, end) windows during which the harness closes the data channel.
    std::vector<std::pair<std::int64_t, std::int64_t>> channel_outages;
    /// Called once per tick after that tick's telemetry has been flushed.
    std::function<void(const TickTrace&)> on_tick;
};

struct RunResult {
    std::vector<std::string> event_log;
    RunReport report;
    std::vector<TickTrace> trace;
    std::vector<SmsMessage> outbox;
    std::vector<Effect> effects;
    std::uint64_t telemetry_emitted = 0;
    std::uint64_t telemetry_retained = 0;  // still queued when the run ended

    std::string event_log_text() const;
};

/// Throws StartupError if the gateway cannot be reached at start.
RunResult run(const Scenario& scenario, const RunOptions& options = {});

enum class ReportFormat { Text, Machine };

std::string render_report(const RunReport& report, ReportFormat format);

/// Inverse of the machine format.
RunReport parse_report(std::string_view machine);

}  // namespace gasguard
