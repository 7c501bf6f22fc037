#pragma once

// The telemetry "virtual server": validated append-only ingestion, per-device
// indexes, alarm-episode queries and a static status page.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gasguard/telemetry.hpp"

namespace gasguard {

struct StoreOffset {
    std::uint64_t byte_offset = 0;  // where the frame starts in the log
    std::uint64_t index = 0;        // position in acceptance order

    friend bool operator==(const StoreOffset&, const StoreOffset&) = default;
};

struct DuplicateRejected {
    std::uint64_t last_seq = 0;  // highest seq already accepted for the device

    friend bool operator==(const DuplicateRejected&, const DuplicateRejected&) = default;
};

using IngestOutcome = std::variant<StoreOffset, DuplicateRejected>;

struct AlarmEpisode {
    std::string device_id;
    GasSpecies gas = GasSpecies::LPG;
    std::int64_t start_ms = 0;
    std::optional<std::int64_t> end_ms;  // timestamp of the last alarmed record; absent while open
    std::int64_t peak_ppm = 0;

    friend bool operator==(const AlarmEpisode&, const AlarmEpisode&) = default;
};

struct Recovered;

/// Rebuilds a store from its log, creating the file if missing. A trailing
/// partial frame is cut off the file and reported. Throws RecoveryError for a
/// corrupt complete frame or a seq regression.
Recovered recover(const std::filesystem::path& log_path, bool sync = true);

class TelemetryStore {
public:
    /// Volatile store with no log file.
    TelemetryStore() = default;
    ~TelemetryStore();

    TelemetryStore(const TelemetryStore&) = delete;
    TelemetryStore& operator=(const TelemetryStore&) = delete;

    /// Appends iff seq is above the device's last accepted seq. With a log the
    /// frame is written (and synced, if enabled) before the record becomes
    /// visible. Throws IngestError when the write fails.
    IngestOutcome ingest(const TelemetryRecord& record);

    std::optional<TelemetryRecord> latest(std::string_view device_id) const;

    /// Throws UsageError when from_ms > to_ms.
    std::vector<AlarmEpisode> alarm_episodes(std::string_view device_id, std::int64_t from_ms,
                                             std::int64_t to_ms) const;

    std::vector<std::string> devices() const;
    std::vector<TelemetryRecord> records() const;
    std::vector<TelemetryRecord> records(std::string_view device_id) const;
    std::size_t size() const;
    std::size_t count(std::string_view device_id) const;
    std::uint64_t log_bytes() const;

    /// Latest record per device, ordered by device_id.
    std::vector<TelemetryRecord> latest_per_device() const;

    bool persistent() const noexcept { return fd_ >= 0; }

private:
    friend Recovered recover(const std::filesystem::path&, bool);

    struct DeviceIndex {
        std::vector<std::size_t> rows;
        std::uint64_t last_seq = 0;
    };

    void append_unlocked(const TelemetryRecord& record, std::uint64_t frame_bytes);

    mutable std::shared_mutex mutex_;
    std::vector<TelemetryRecord> records_;
    std::map<std::string, DeviceIndex, std::less<>> devices_;
    std::uint64_t bytes_ = 0;
    int fd_ = -1;
    bool sync_ = true;
};

struct RecoveryReport {
    std::size_t records = 0;
    std::uint64_t valid_bytes = 0;
    std::uint64_t truncated_bytes = 0;  // size of a dropped partial final frame

    bool truncated() const noexcept { return truncated_bytes > 0; }
};

struct Recovered {
    std::unique_ptr<TelemetryStore> store;
    RecoveryReport report;
};

IngestOutcome ingest(TelemetryStore& store, const TelemetryRecord& record);
std::optional<TelemetryRecord> query_latest(const TelemetryStore& store, std::string_view device_id);
std::vector<AlarmEpisode> query_alarm_episodes(const TelemetryStore& store, std::string_view device_id,
                                               std::int64_t from_ms, std::int64_t to_ms);

/// Server-rendered XHTML-compatible page, one table row per device.
std::string render_status_page(const TelemetryStore& store);

/// Ingest-socket protocol for one received frame: "ACK <seq>\n" or
/// "ERR <reason>\n" ("duplicate" and "storage" besides the frame reasons).
std::string handle_ingest_line(TelemetryStore& store, std::string_view frame);

/// {"device_id":..,"gas":..,"start_ms":..,"end_ms":..|null,"peak_ppm":..}
std::string encode_episodes(const std::vector<AlarmEpisode>& episodes);

/// ["dev-a","dev-b"]
std::string encode_device_list(const std::vector<std::string>& devices);

}  // namespace gasguard
