#pragma once

// Test-only reference implementations. None of these call the code path they
// are used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gasguard/firmware.hpp"
#include "gasguard/gateway.hpp"
#include "gasguard/sensor_model.hpp"

namespace gasguard::oracle {

/// Alarm state recomputed from the whole verdict history with window scans:
/// raise when the last N verdicts since the previous event are all Over, clear
/// when the last M since the raise are all UnderClear.
inline AlarmFsm reference_fsm(const std::vector<Verdict>& history, int n, int m,
                              const std::vector<std::int64_t>& times) {
    auto all_are = [&](std::size_t end, int len, Verdict v) {
        for (int j = 0; j < len; ++j) {
            if (history[end - static_cast<std::size_t>(j)] != v) return false;
        }
        return true;
    };
    bool latched = false;
    long last_event = -1;
    long raised_at = -1;
    for (std::size_t i = 0; i < history.size(); ++i) {
        const long since = static_cast<long>(i) - last_event;
        if (!latched && since >= n && all_are(i, n, Verdict::Over)) {
            latched = true;
            last_event = raised_at = static_cast<long>(i);
        } else if (latched && since >= m && all_are(i, m, Verdict::UnderClear)) {
            latched = false;
            last_event = static_cast<long>(i);
        }
    }
    auto run_length = [&](Verdict v) {
        int k = 0;
        for (long i = static_cast<long>(history.size()) - 1; i > last_event && history[static_cast<std::size_t>(i)] == v; --i) ++k;
        return k;
    };
    AlarmFsm out;
    if (latched) {
        const int k = run_length(Verdict::UnderClear);
        out.state = k > 0 ? AlarmState::Clearing : AlarmState::Alarmed;
        out.under_count = k;
        out.latched_since_ms = times[static_cast<std::size_t>(raised_at)];
    } else {
        const int k = run_length(Verdict::Over);
        out.state = k > 0 ? AlarmState::Pending : AlarmState::Normal;
        out.over_count = k;
    }
    return out;
}

/// Smallest ppm (by bisection on the forward chain) whose ADC code is >= code.
inline double lowest_ppm_with_code(std::uint32_t code, GasSpecies gas, const SensorModel& model) {
    double lo = 1e-6, hi = 1e7;
    for (int i = 0; i < 200; ++i) {
        const double mid = std::sqrt(lo * hi);
        if (sample(mid, gas, model, 0).adc_code >= code) hi = mid;
        else lo = mid;
    }
    return hi;
}

struct RoundTripBound {
    double worst_relative_error = 0.0;
    double worst_at_ppm = 0.0;
    std::uint32_t worst_code = 0;
};

/// Enumerates every ADC code, finds the ppm interval that maps to it, and
/// takes the worst relative error of the code's estimate over that interval
/// (clipped to [pmin, pmax]). The error is extremal at interval endpoints.
inline RoundTripBound exhaustive_round_trip_bound(GasSpecies gas, const SensorModel& model, double pmin,
                                                  double pmax) {
    RoundTripBound out;
    const std::uint32_t full = model.full_scale_code();
    double next_lo = lowest_ppm_with_code(0, gas, model);
    for (std::uint32_t code = 0; code <= full; ++code) {
        const double lo = next_lo;
        const double hi = code < full ? lowest_ppm_with_code(code + 1, gas, model) : 1e7;
        next_lo = hi;
        const double a = std::max(lo, pmin), b = std::min(hi, pmax);
        if (a > b) continue;
        const double est = estimate_ppm(code, gas, model);
        for (double p : {a, b}) {
            const double err = std::abs(est - p) / p;
            if (err > out.worst_relative_error) out = {err, p, code};
        }
    }
    return out;
}

/// Episodes by brute force: every alarmed record not preceded by an alarmed
/// record starts an episode; scan forward for its extent and peak.
inline std::vector<AlarmEpisode> brute_force_episodes(const std::vector<TelemetryRecord>& all,
                                                      std::string_view device, std::int64_t from,
                                                      std::int64_t to) {
    std::vector<TelemetryRecord> rs;
    for (const auto& r : all) {
        if (r.device_id == device && r.timestamp_ms >= from && r.timestamp_ms <= to) rs.push_back(r);
    }
    std::vector<AlarmEpisode> out;
    for (std::size_t i = 0; i < rs.size(); ++i) {
        if (!rs[i].alarm || (i > 0 && rs[i - 1].alarm)) continue;
        AlarmEpisode e{rs[i].device_id, rs[i].gas, rs[i].timestamp_ms, std::nullopt, 0};
        std::size_t j = i;
        while (j < rs.size() && rs[j].alarm) {
            e.peak_ppm = std::max(e.peak_ppm, rs[j].ppm);
            ++j;
        }
        if (j < rs.size()) e.end_ms = rs[j - 1].timestamp_ms;
        out.push_back(e);
    }
    return out;
}

/// Tag balance check for the XHTML-style pages we render: every element is
/// closed in order, void elements self-close, attribute quotes balance.
inline bool well_formed_markup(std::string_view page) {
    std::vector<std::string> stack;
    std::size_t i = 0;
    while ((i = page.find('<', i)) != std::string_view::npos) {
        const auto close = page.find('>', i);
        if (close == std::string_view::npos) return false;
        std::string_view tag = page.substr(i + 1, close - i - 1);
        i = close + 1;
        if (tag.starts_with("!")) continue;  // doctype
        if (std::count(tag.begin(), tag.end(), '"') % 2 != 0) return false;
        if (tag.ends_with("/")) continue;
        if (tag.starts_with("/")) {
            if (stack.empty() || stack.back() != tag.substr(1)) return false;
            stack.pop_back();
            continue;
        }
        stack.emplace_back(tag.substr(0, tag.find(' ')));
    }
    return stack.empty() && page.find('>') != std::string_view::npos;
}

}  // namespace gasguard::oracle
