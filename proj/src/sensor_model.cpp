#include "gasguard/sensor_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gasguard/error.hpp"

namespace gasguard {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

}  // namespace

void SensitivityCurve::validate() const {
    const std::string name{to_string(gas)};
    require(slope > 0.0, name + ": slope must be positive");
    require(ref_ppm > 0.0, name + ": ref_ppm must be positive");
    require(ppm_min > 0.0 && ppm_max > ppm_min, name + ": invalid ppm range");
    // The cap may only bind below the valid range.
    require(clean_air_ratio > std::pow(ppm_min / ref_ppm, -slope),
            name + ": clean_air_ratio binds inside the valid range");
}

SensitivityCurve default_curve(GasSpecies gas) {
    SensitivityCurve c;
    c.gas = gas;
    switch (gas) {
        case GasSpecies::LPG: c.slope = 0.42; break;
        case GasSpecies::Propane: c.slope = 0.40; break;
        case GasSpecies::Methane: c.slope = 0.35; break;
        case GasSpecies::Butane: c.slope = 0.38; break;
    }
    return c;
}

void SensorModel::validate() const {
    require(r0 > 0.0, "r0 must be positive");
    require(rl > 0.0, "rl must be positive");
    require(vc > 0.0, "vc must be positive");
    require(vref > 0.0, "vref must be positive");
    require(adc_bits >= 8 && adc_bits <= 16, "adc_bits must be in [8, 16]");
    for (GasSpecies gas : kAllGases) {
        require(curve(gas).gas == gas, "curve table out of order");
        curve(gas).validate();
    }
}

double ppm_to_resistance(double ppm, GasSpecies gas, const SensorModel& model) {
    if (!(ppm >= 0.0)) throw DomainError("ppm must be non-negative");
    const SensitivityCurve& c = model.curve(gas);
    const double cap = c.clean_air_ratio * model.r0;
    if (ppm == 0.0) return cap;
    return std::min(cap, model.r0 * std::pow(ppm / c.ref_ppm, -c.slope));
}

double resistance_to_voltage(double rs, const SensorModel& model) {
    if (!(rs > 0.0)) throw DomainError("rs must be positive");
    return model.vc * model.rl / (rs + model.rl);
}

std::uint32_t adc_quantize(double vout, const SensorModel& model) {
    if (!(vout >= 0.0)) throw DomainError("vout must be non-negative");
    const double steps = std::ldexp(1.0, model.adc_bits);
    const double code = std::floor(vout * steps / model.vref);
    const double full = model.full_scale_code();
    return static_cast<std::uint32_t>(code >= full ? full : code);
}

double code_center_voltage(std::uint32_t code, const SensorModel& model) {
    return (static_cast<double>(code) + 0.5) * model.vref / std::ldexp(1.0, model.adc_bits);
}

double code_to_resistance(std::uint32_t code, const SensorModel& model) {
    if (code > model.full_scale_code()) throw DomainError("adc code above full scale");
    const double v = code_center_voltage(code, model);
    if (v >= model.vc) throw SaturationError("adc code " + std::to_string(code) + " at or above vc");
    return model.rl * (model.vc - v) / v;
}

SensorReading sample(double true_ppm, GasSpecies gas, const SensorModel& model,
                     std::int64_t timestamp_ms) {
    SensorReading r;
    r.timestamp_ms = timestamp_ms;
    r.gas = gas;
    r.true_ppm = true_ppm;
    r.rs = ppm_to_resistance(true_ppm, gas, model);
    r.vout = resistance_to_voltage(r.rs, model);
    r.adc_code = adc_quantize(r.vout, model);
    return r;
}

double estimate_ppm(std::uint32_t adc_code, GasSpecies gas, const SensorModel& model) {
    const SensitivityCurve& c = model.curve(gas);
    const double rs = code_to_resistance(adc_code, model);
    if (rs >= c.clean_air_ratio * model.r0) return 0.0;
    const double ceiling = 10.0 * c.ppm_max;
    if (rs <= 0.0) return ceiling;
    const double ppm = c.ref_ppm * std::pow(rs / model.r0, -1.0 / c.slope);
    return std::min(ppm, ceiling);
}

double calibrate_r0(std::span<const SensorReading> readings, const SensorModel& model) {
    if (readings.empty()) throw UsageError("calibrate_r0 needs at least one reading");
    double sum = 0.0;
    for (const SensorReading& r : readings) {
        if (r.true_ppm != model.curve(r.gas).ref_ppm) {
            throw UsageError("calibration reading not taken at the curve's ref_ppm");
        }
        if (r.adc_code >= model.full_scale_code()) {
            throw SaturationError("calibration reading at full-scale adc");
        }
        sum += code_to_resistance(r.adc_code, model);
    }
    return sum / static_cast<double>(readings.size());
}

}  // namespace gasguard
