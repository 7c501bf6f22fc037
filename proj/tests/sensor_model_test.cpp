#include "gasguard/sensor_model.hpp"

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "gasguard/error.hpp"
#include "gasguard/firmware.hpp"
#include "oracles/oracles.hpp"

namespace gasguard {
namespace {

// Frozen from tests/oracles/derive_constants.py.
constexpr double kRsAt10000Lpg = 3801.893963205612;
constexpr double kVoutAt3802 = 4.2013276195277705;
constexpr double kCalibratedR0_10k = 10007.326007326008;
constexpr double kCalibratedR0_15k = 14978.65072587532;
// Worst relative round-trip error over [300, 8000] ppm, per gas, from the
// python enumeration. The C++ enumeration below must agree.
constexpr double kRoundTripBound[] = {0.008173701885622279, 0.008324838160267902, 0.008924566601978151,
                                      0.008547874590262529};

TEST(SensorModel, DefaultModelIsValid) {
    SensorModel model;
    EXPECT_NO_THROW(model.validate());
    EXPECT_EQ(model.full_scale_code(), 1023u);
    EXPECT_DOUBLE_EQ(model.vc, model.vref);
}

TEST(SensorModel, ValidateRejectsBadConstants) {
    SensorModel model;
    model.adc_bits = 7;
    EXPECT_THROW(model.validate(), ConfigError);
    model = SensorModel{};
    model.rl = 0;
    EXPECT_THROW(model.validate(), ConfigError);
    model = SensorModel{};
    model.curve(GasSpecies::Methane).slope = 0;
    EXPECT_THROW(model.validate(), ConfigError);
    model = SensorModel{};
    // (200/1000)^-0.42 = 1.966; a cap of 1.5 would bind inside the valid range.
    model.curve(GasSpecies::LPG).clean_air_ratio = 1.5;
    EXPECT_THROW(model.validate(), ConfigError);
}

TEST(PpmToResistance, FixedPointAndCap) {
    SensorModel model;
    EXPECT_DOUBLE_EQ(ppm_to_resistance(1000, GasSpecies::LPG, model), 10000.0);
    EXPECT_DOUBLE_EQ(ppm_to_resistance(0, GasSpecies::LPG, model), 100000.0);
    EXPECT_NEAR(ppm_to_resistance(10000, GasSpecies::LPG, model), kRsAt10000Lpg, 1e-9);
}

TEST(PpmToResistance, NegativePpmIsDomainError) {
    SensorModel model;
    EXPECT_THROW(ppm_to_resistance(-1, GasSpecies::LPG, model), DomainError);
    EXPECT_THROW(ppm_to_resistance(std::nan(""), GasSpecies::LPG, model), DomainError);
}

TEST(PpmToResistance, MonotoneForEveryGas) {
    SensorModel model;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ppm(0.0, 20000.0);
    for (GasSpecies gas : kAllGases) {
        for (int i = 0; i < 2000; ++i) {
            double a = ppm(rng), b = ppm(rng);
            if (a > b) std::swap(a, b);
            const double ra = ppm_to_resistance(a, gas, model);
            const double rb = ppm_to_resistance(b, gas, model);
            EXPECT_GE(ra, rb);
            const double cap = model.curve(gas).clean_air_ratio * model.r0;
            if (ra < cap && a < b) EXPECT_GT(ra, rb);
        }
    }
}

TEST(ResistanceToVoltage, Divider) {
    SensorModel model;
    EXPECT_DOUBLE_EQ(resistance_to_voltage(20000, model), 2.5);
    EXPECT_NEAR(resistance_to_voltage(3802, model), kVoutAt3802, 1e-12);
    EXPECT_LT(resistance_to_voltage(1e15, model), 1e-9);
    EXPECT_THROW(resistance_to_voltage(0, model), DomainError);
    EXPECT_THROW(resistance_to_voltage(-5, model), DomainError);
}

TEST(ResistanceToVoltage, StrictlyDecreasingInsideRail) {
    SensorModel model;
    double prev = model.vc;
    for (double rs = 1.0; rs < 1e9; rs *= 1.37) {
        const double v = resistance_to_voltage(rs, model);
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, model.vc);
        EXPECT_LT(v, prev);
        prev = v;
    }
}

TEST(AdcQuantize, Examples) {
    SensorModel model;
    EXPECT_EQ(adc_quantize(0.0, model), 0u);
    EXPECT_EQ(adc_quantize(5.0, model), 1023u);
    EXPECT_EQ(adc_quantize(7.0, model), 1023u);
    EXPECT_EQ(adc_quantize(2.5, model), 512u);
    EXPECT_THROW(adc_quantize(-0.1, model), DomainError);
}

TEST(AdcQuantize, MonotoneAndIdempotentThroughCodeCenter) {
    SensorModel model;
    std::uint32_t prev = 0;
    for (double v = 0.0; v <= 5.2; v += 0.0007) {
        const auto code = adc_quantize(v, model);
        EXPECT_GE(code, prev);
        prev = code;
    }
    for (std::uint32_t code = 0; code <= model.full_scale_code(); ++code) {
        EXPECT_EQ(adc_quantize(code_center_voltage(code, model), model), code);
    }
}

TEST(Sample, ConsistentReadings) {
    SensorModel model;
    const auto clean = sample(0, GasSpecies::LPG, model, 42);
    EXPECT_EQ(clean.timestamp_ms, 42);
    EXPECT_DOUBLE_EQ(clean.rs, 100000.0);
    EXPECT_EQ(clean.adc_code, 170u);  // oracle: code(0, LPG)

    EXPECT_EQ(sample(1000, GasSpecies::LPG, model, 0).adc_code, 682u);
    EXPECT_LE(sample(500, GasSpecies::LPG, model, 0).adc_code, sample(2000, GasSpecies::LPG, model, 0).adc_code);

    for (double ppm : {0.0, 1.0, 300.0, 5000.0, 1e6}) {
        const auto r = sample(ppm, GasSpecies::Propane, model, 0);
        EXPECT_GT(r.rs, 0.0);
        EXPECT_GE(r.vout, 0.0);
        EXPECT_LE(r.vout, model.vc);
        EXPECT_LE(r.adc_code, model.full_scale_code());
        EXPECT_EQ(r.adc_code, adc_quantize(resistance_to_voltage(r.rs, model), model));
    }
    EXPECT_THROW(sample(-3, GasSpecies::LPG, model, 0), DomainError);
}

TEST(EstimatePpm, Examples) {
    SensorModel model;
    const auto code_at_r0 = adc_quantize(resistance_to_voltage(model.r0, model), model);
    EXPECT_NEAR(estimate_ppm(code_at_r0, GasSpecies::LPG, model), 1000.0, 5.0);
    EXPECT_EQ(estimate_ppm(0, GasSpecies::LPG, model), 0.0);
    const double est = estimate_ppm(sample(4000, GasSpecies::LPG, model, 0).adc_code, GasSpecies::LPG, model);
    EXPECT_GE(est, 3800.0);
    EXPECT_LE(est, 4200.0);
}

TEST(EstimatePpm, ClampedAndSaturation) {
    SensorModel model;
    for (GasSpecies gas : kAllGases) {
        EXPECT_LE(estimate_ppm(model.full_scale_code(), gas, model), 10.0 * model.curve(gas).ppm_max);
    }
    // With the reference above the supply, top codes sit at or above vc.
    model.vref = 5.5;
    EXPECT_THROW(estimate_ppm(model.full_scale_code(), GasSpecies::LPG, model), SaturationError);
    EXPECT_THROW(estimate_ppm(2000, GasSpecies::LPG, SensorModel{}), DomainError);
}

TEST(EstimatePpm, ExhaustiveBoundMatchesPythonOracle) {
    SensorModel model;
    for (GasSpecies gas : kAllGases) {
        const auto bound = oracle::exhaustive_round_trip_bound(gas, model, 300.0, 8000.0);
        EXPECT_NEAR(bound.worst_relative_error, kRoundTripBound[index_of(gas)], 1e-6) << to_string(gas);
        EXPECT_LE(bound.worst_relative_error, 0.05);
    }
}

TEST(EstimatePpm, RandomRoundTripsStayInsideTabulatedBound) {
    SensorModel model;
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> log_ppm(std::log(300.0), std::log(8000.0));
    for (GasSpecies gas : kAllGases) {
        for (int i = 0; i < 5000; ++i) {
            const double p = std::exp(log_ppm(rng));
            const double est = estimate_ppm(sample(p, gas, model, 0).adc_code, gas, model);
            EXPECT_LE(std::abs(est - p) / p, kRoundTripBound[index_of(gas)] + 1e-12) << p;
        }
    }
}

TEST(EstimatePpm, CleanAirNeverExceedsAnyThreshold) {
    SensorModel model;
    ThresholdTable table;
    for (GasSpecies gas : kAllGases) {
        const auto code = sample(0, gas, model, 0).adc_code;
        EXPECT_EQ(evaluate_threshold(estimate_ppm(code, gas, model), gas, table), Verdict::UnderClear);
    }
}

TEST(CalibrateR0, RecoversGeneratingResistance) {
    SensorModel model;
    const double lsb_ohms = 50.0;  // one ADC step near 3.3 V is ~44 ohms

    std::vector<SensorReading> one{sample(1000, GasSpecies::LPG, model, 0)};
    const double r0 = calibrate_r0(one, model);
    EXPECT_NEAR(r0, kCalibratedR0_10k, 1e-6);
    EXPECT_NEAR(r0, 10000.0, lsb_ohms);

    std::vector<SensorReading> two{one[0], one[0]};
    EXPECT_DOUBLE_EQ(calibrate_r0(two, model), r0);

    SensorModel other = model;
    other.r0 = 15000.0;
    std::vector<SensorReading> generated{sample(1000, GasSpecies::LPG, other, 0)};
    SensorModel unknown = model;
    unknown.r0 = 1.0;  // ignored
    EXPECT_NEAR(calibrate_r0(generated, unknown), kCalibratedR0_15k, 1e-6);
}

TEST(CalibrateR0, Errors) {
    SensorModel model;
    std::vector<SensorReading> none;
    EXPECT_THROW(calibrate_r0(none, model), UsageError);

    auto r = sample(1000, GasSpecies::LPG, model, 0);
    r.adc_code = model.full_scale_code();
    std::vector<SensorReading> saturated{r};
    EXPECT_THROW(calibrate_r0(saturated, model), SaturationError);

    std::vector<SensorReading> wrong_exposure{sample(2000, GasSpecies::LPG, model, 0)};
    EXPECT_THROW(calibrate_r0(wrong_exposure, model), UsageError);
}

}  // namespace
}  // namespace gasguard
