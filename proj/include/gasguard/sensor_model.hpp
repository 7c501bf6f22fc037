#pragma once

// MQ-6 signal chain: concentration -> sensing resistance -> divider voltage
// -> ADC code, and the inverse used by the firmware to display ppm.

#include <array>
#include <cstdint>
#include <span>

#include "gasguard/gas.hpp"

namespace gasguard {

/// Log-log power law Rs/R0 = (ppm/ref_ppm)^(-slope), capped at clean_air_ratio.
struct SensitivityCurve {
    GasSpecies gas = GasSpecies::LPG;
    double slope = 0.42;
    double ref_ppm = 1000.0;
    double clean_air_ratio = 10.0;
    double ppm_min = 200.0;
    double ppm_max = 10000.0;

    /// Throws ConfigError when the curve is unusable.
    void validate() const;
};

/// Datasheet-style defaults. None of these numbers are measured values for a
/// particular part; override them per deployment.
///   slope: LPG 0.42, Propane 0.40, Methane 0.35, Butane 0.38
///   ref_ppm 1000, valid range [200, 10000], clean-air ratio 10
SensitivityCurve default_curve(GasSpecies gas);

struct SensorModel {
    double r0 = 10000.0;   // ohms, Rs at ref_ppm
    double rl = 20000.0;   // ohms, load resistor
    double vc = 5.0;       // volts, circuit supply
    double vref = 5.0;     // volts, ADC reference (shared 5 V rail)
    int adc_bits = 10;
    std::array<SensitivityCurve, 4> curves{default_curve(GasSpecies::LPG),
                                           default_curve(GasSpecies::Propane),
                                           default_curve(GasSpecies::Methane),
                                           default_curve(GasSpecies::Butane)};

    const SensitivityCurve& curve(GasSpecies gas) const { return curves[index_of(gas)]; }
    SensitivityCurve& curve(GasSpecies gas) { return curves[index_of(gas)]; }

    std::uint32_t full_scale_code() const { return (std::uint32_t{1} << adc_bits) - 1; }

    void validate() const;
};

struct SensorReading {
    std::int64_t timestamp_ms = 0;
    GasSpecies gas = GasSpecies::LPG;
    double true_ppm = 0.0;
    double rs = 0.0;
    double vout = 0.0;
    std::uint32_t adc_code = 0;

    friend bool operator==(const SensorReading&, const SensorReading&) = default;
};

double ppm_to_resistance(double ppm, GasSpecies gas, const SensorModel& model);

/// Node voltage of the Rs/RL divider, measured across RL.
double resistance_to_voltage(double rs, const SensorModel& model);

/// floor(v * 2^bits / vref) clamped to full scale.
std::uint32_t adc_quantize(double vout, const SensorModel& model);

/// Midpoint voltage of the bin that quantizes to `code`.
double code_center_voltage(std::uint32_t code, const SensorModel& model);

/// Sensing resistance implied by the code-center voltage. Throws
/// SaturationError when that voltage reaches vc.
double code_to_resistance(std::uint32_t code, const SensorModel& model);

SensorReading sample(double true_ppm, GasSpecies gas, const SensorModel& model,
                     std::int64_t timestamp_ms);

/// Inverts the chain. Returns 0 inside the clean-air cap and never more than
/// 10 * ppm_max.
double estimate_ppm(std::uint32_t adc_code, GasSpecies gas, const SensorModel& model);

/// Mean back-solved Rs over readings taken at the curve's ref_ppm. model.r0 is
/// ignored.
double calibrate_r0(std::span<const SensorReading> readings, const SensorModel& model);

}  // namespace gasguard
