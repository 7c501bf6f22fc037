#include "gasguard/telemetry.hpp"

#include <gtest/gtest.h>

#include "generators.hpp"

namespace gasguard {
namespace {

constexpr std::string_view kMinimal =
    "{\"device_id\":\"dev1\",\"seq\":0,\"timestamp_ms\":0,\"gas\":\"LPG\",\"ppm\":0,\"adc_code\":0,\"alarm\":false}\n";

FrameErrorReason reason_of(std::string_view frame) {
    try {
        decode_frame(frame);
    } catch (const FrameError& e) {
        return e.reason();
    }
    ADD_FAILURE() << "frame decoded: " << frame;
    return FrameErrorReason::Syntax;
}

std::string replace(std::string s, std::string_view from, std::string_view to) {
    s.replace(s.find(from), from.size(), to);
    return s;
}

TEST(DecodeFrame, MinimalFrame) {
    const auto r = decode_frame(kMinimal);
    EXPECT_EQ(r, (TelemetryRecord{"dev1", 0, 0, GasSpecies::LPG, 0, 0, false}));
    EXPECT_EQ(encode_frame(r), kMinimal);
}

TEST(DecodeFrame, AcceptsWhitespaceAndKeyOrder) {
    const auto r = decode_frame(
        "{ \"alarm\": true, \"adc_code\": 700, \"ppm\": 1200, \"gas\": \"Propane\", \"timestamp_ms\": 5,"
        " \"seq\": 9, \"device_id\": \"a-b_C\" }\n");
    EXPECT_EQ(r, (TelemetryRecord{"a-b_C", 9, 5, GasSpecies::Propane, 1200, 700, true}));
}

TEST(DecodeFrame, RejectsWithReason) {
    const std::string base(kMinimal);
    EXPECT_EQ(reason_of(replace(base, "\"adc_code\":0", "\"adc_code\":2048")), FrameErrorReason::Range);
    EXPECT_EQ(reason_of(replace(base, "\"adc_code\":0", "\"adc_code\":-1")), FrameErrorReason::Range);
    EXPECT_EQ(reason_of(replace(base, "\"ppm\":0", "\"ppm\":-3")), FrameErrorReason::Range);
    EXPECT_EQ(reason_of(replace(base, "\"ppm\":0", "\"ppm\":1.5")), FrameErrorReason::Type);
    EXPECT_EQ(reason_of(replace(base, "\"alarm\":false", "\"alarm\":0")), FrameErrorReason::Type);
    EXPECT_EQ(reason_of(replace(base, "\"dev1\"", "\"dev 1\"")), FrameErrorReason::DeviceId);
    EXPECT_EQ(reason_of(replace(base, "\"dev1\"", "\"\"")), FrameErrorReason::DeviceId);
    EXPECT_EQ(reason_of(replace(base, "\"dev1\"", "\"" + std::string(33, 'x') + "\"")), FrameErrorReason::DeviceId);
    EXPECT_EQ(reason_of(replace(base, "\"LPG\"", "\"Hydrogen\"")), FrameErrorReason::Gas);
    EXPECT_EQ(reason_of(replace(base, ",\"alarm\":false", "")), FrameErrorReason::MissingField);
    EXPECT_EQ(reason_of(replace(base, "\"alarm\":false", "\"alarm\":false,\"x\":1")), FrameErrorReason::ExtraField);
    EXPECT_EQ(reason_of(replace(base, "\"alarm\":false", "\"alarm\":false,\"seq\":1")),
              FrameErrorReason::DuplicateField);
    EXPECT_EQ(reason_of(base.substr(0, base.size() - 1)), FrameErrorReason::Unterminated);
    EXPECT_EQ(reason_of("{\"device_id\":\n}\n"), FrameErrorReason::Unterminated);
    EXPECT_EQ(reason_of("[1,2]\n"), FrameErrorReason::Syntax);
    EXPECT_EQ(reason_of("{\"device_id\":\"x\",\n"), FrameErrorReason::Syntax);
    EXPECT_EQ(reason_of("{garbage\n"), FrameErrorReason::Syntax);
    EXPECT_EQ(reason_of(replace(base, "\"seq\":0", "\"seq\":9223372036854775808")), FrameErrorReason::Range);
}

TEST(EncodeFrame, RejectsInvalidRecords) {
    TelemetryRecord r{"dev1", 0, 0, GasSpecies::LPG, 0, 0, false};
    r.adc_code = 1024;
    EXPECT_THROW(encode_frame(r), FrameError);
    r.adc_code = 0;
    r.device_id = "bad id";
    EXPECT_THROW(encode_frame(r), FrameError);
}

TEST(Frame, RoundTripProperty) {
    gen::Rng rng(5);
    for (int i = 0; i < 3000; ++i) {
        const TelemetryRecord r = gen::record(rng);
        const std::string frame = encode_frame(r);
        ASSERT_EQ(decode_frame(frame), r);
        ASSERT_EQ(encode_frame(decode_frame(frame)), frame);
    }
}

}  // namespace
}  // namespace gasguard
