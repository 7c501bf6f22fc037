#include "gasguard/gateway.hpp"

#include <cerrno>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <json.hpp>

#include "gasguard/error.hpp"

namespace gasguard {

namespace {

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

void write_all(int fd, std::string_view bytes) {
    while (!bytes.empty()) {
        const ssize_t n = ::write(fd, bytes.data(), bytes.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            throw IngestError(errno_text("log write"));
        }
        bytes.remove_prefix(static_cast<std::size_t>(n));
    }
}

std::string html_escape(std::string_view text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

TelemetryStore::~TelemetryStore() {
    if (fd_ >= 0) ::close(fd_);
}

void TelemetryStore::append_unlocked(const TelemetryRecord& record, std::uint64_t frame_bytes) {
    auto it = devices_.find(record.device_id);
    if (it == devices_.end()) it = devices_.emplace(record.device_id, DeviceIndex{}).first;
    it->second.rows.push_back(records_.size());
    it->second.last_seq = record.seq;
    records_.push_back(record);
    bytes_ += frame_bytes;
}

IngestOutcome TelemetryStore::ingest(const TelemetryRecord& record) {
    const std::string frame = encode_frame(record);
    std::unique_lock lock(mutex_);

    if (auto it = devices_.find(record.device_id); it != devices_.end() && record.seq <= it->second.last_seq) {
        return DuplicateRejected{it->second.last_seq};
    }

    const StoreOffset offset{bytes_, records_.size()};
    if (fd_ >= 0) {
        try {
            write_all(fd_, frame);
            if (sync_ && ::fdatasync(fd_) != 0) throw IngestError(errno_text("log sync"));
        } catch (const IngestError&) {
            // Roll the file back so a partial frame never reaches recovery.
            if (::ftruncate(fd_, static_cast<off_t>(bytes_)) == 0) ::lseek(fd_, 0, SEEK_END);
            throw;
        }
    }
    append_unlocked(record, frame.size());
    return offset;
}

std::optional<TelemetryRecord> TelemetryStore::latest(std::string_view device_id) const {
    std::shared_lock lock(mutex_);
    auto it = devices_.find(device_id);
    if (it == devices_.end()) return std::nullopt;
    return records_[it->second.rows.back()];
}

std::vector<AlarmEpisode> TelemetryStore::alarm_episodes(std::string_view device_id, std::int64_t from_ms,
                                                         std::int64_t to_ms) const {
    if (from_ms > to_ms) throw UsageError("alarm query range is inverted");
    std::shared_lock lock(mutex_);
    std::vector<AlarmEpisode> episodes;
    auto it = devices_.find(device_id);
    if (it == devices_.end()) return episodes;

    std::optional<AlarmEpisode> open;
    for (std::size_t row : it->second.rows) {
        const TelemetryRecord& r = records_[row];
        if (r.timestamp_ms < from_ms || r.timestamp_ms > to_ms) continue;
        if (r.alarm) {
            if (!open) open = AlarmEpisode{r.device_id, r.gas, r.timestamp_ms, std::nullopt, r.ppm};
            open->peak_ppm = std::max(open->peak_ppm, r.ppm);
            open->end_ms = r.timestamp_ms;  // provisional until the falling edge
        } else if (open) {
            episodes.push_back(*open);
            open.reset();
        }
    }
    if (open) {
        open->end_ms.reset();
        episodes.push_back(*open);
    }
    return episodes;
}

std::vector<std::string> TelemetryStore::devices() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, index] : devices_) out.push_back(id);
    return out;
}

std::vector<TelemetryRecord> TelemetryStore::records() const {
    std::shared_lock lock(mutex_);
    return records_;
}

std::vector<TelemetryRecord> TelemetryStore::records(std::string_view device_id) const {
    std::shared_lock lock(mutex_);
    std::vector<TelemetryRecord> out;
    if (auto it = devices_.find(device_id); it != devices_.end()) {
        for (std::size_t row : it->second.rows) out.push_back(records_[row]);
    }
    return out;
}

std::size_t TelemetryStore::size() const {
    std::shared_lock lock(mutex_);
    return records_.size();
}

std::size_t TelemetryStore::count(std::string_view device_id) const {
    std::shared_lock lock(mutex_);
    auto it = devices_.find(device_id);
    return it == devices_.end() ? 0 : it->second.rows.size();
}

std::uint64_t TelemetryStore::log_bytes() const {
    std::shared_lock lock(mutex_);
    return bytes_;
}

std::vector<TelemetryRecord> TelemetryStore::latest_per_device() const {
    std::shared_lock lock(mutex_);
    std::vector<TelemetryRecord> out;
    for (const auto& [id, index] : devices_) out.push_back(records_[index.rows.back()]);
    return out;
}

Recovered recover(const std::filesystem::path& log_path, bool sync) {
    Recovered out{std::make_unique<TelemetryStore>(), {}};
    TelemetryStore& store = *out.store;

    const int fd = ::open(log_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) throw RecoveryError(0, errno_text(log_path.c_str()));
    store.fd_ = fd;
    store.sync_ = sync;

    std::string contents;
    {
        std::ifstream in(log_path, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        contents = std::move(buf).str();
    }

    std::uint64_t offset = 0;
    while (offset < contents.size()) {
        const auto newline = contents.find('\n', offset);
        if (newline == std::string::npos) break;  // partial tail
        const std::string_view frame(contents.data() + offset, newline - offset + 1);
        TelemetryRecord record;
        try {
            record = decode_frame(frame);
        } catch (const FrameError& e) {
            throw RecoveryError(offset, std::string("corrupt frame: ") + e.what());
        }
        if (auto it = store.devices_.find(record.device_id);
            it != store.devices_.end() && record.seq <= it->second.last_seq) {
            throw RecoveryError(offset, "seq regression for device " + record.device_id);
        }
        store.append_unlocked(record, frame.size());
        offset = newline + 1;
    }

    out.report.records = store.records_.size();
    out.report.valid_bytes = offset;
    out.report.truncated_bytes = contents.size() - offset;
    if (out.report.truncated()) {
        if (::ftruncate(fd, static_cast<off_t>(offset)) != 0) throw RecoveryError(offset, errno_text("truncate"));
    }
    if (::lseek(fd, 0, SEEK_END) < 0) throw RecoveryError(offset, errno_text("seek"));
    return out;
}

IngestOutcome ingest(TelemetryStore& store, const TelemetryRecord& record) { return store.ingest(record); }

std::optional<TelemetryRecord> query_latest(const TelemetryStore& store, std::string_view device_id) {
    return store.latest(device_id);
}

std::vector<AlarmEpisode> query_alarm_episodes(const TelemetryStore& store, std::string_view device_id,
                                               std::int64_t from_ms, std::int64_t to_ms) {
    return store.alarm_episodes(device_id, from_ms, to_ms);
}

std::string render_status_page(const TelemetryStore& store) {
    std::string page =
        "<!DOCTYPE html>\n"
        "<html>\n"
        "<head><meta charset=\"utf-8\"/><title>Gas monitor</title></head>\n"
        "<body>\n"
        "<h1>Gas monitor</h1>\n"
        "<table>\n"
        "<tr><th>Device</th><th>Gas</th><th>PPM</th><th>Alarm</th><th>Timestamp (ms)</th></tr>\n";
    for (const TelemetryRecord& r : store.latest_per_device()) {
        page += "<tr><td>" + html_escape(r.device_id) + "</td><td>" + std::string(to_string(r.gas)) + "</td><td>" +
                std::to_string(r.ppm) + "</td>";
        page += r.alarm ? "<td class=\"alarm\">ALARM</td>" : "<td>ok</td>";
        page += "<td>" + std::to_string(r.timestamp_ms) + "</td></tr>\n";
    }
    page += "</table>\n</body>\n</html>\n";
    return page;
}

std::string handle_ingest_line(TelemetryStore& store, std::string_view frame) {
    TelemetryRecord record;
    try {
        record = decode_frame(frame);
    } catch (const FrameError& e) {
        return "ERR " + std::string(to_string(e.reason())) + "\n";
    }
    try {
        const IngestOutcome outcome = store.ingest(record);
        if (std::holds_alternative<DuplicateRejected>(outcome)) return "ERR duplicate\n";
    } catch (const IngestError&) {
        return "ERR storage\n";
    }
    return "ACK " + std::to_string(record.seq) + "\n";
}

std::string encode_episodes(const std::vector<AlarmEpisode>& episodes) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const AlarmEpisode& e : episodes) {
        nlohmann::ordered_json item;
        item["device_id"] = e.device_id;
        item["gas"] = std::string(to_string(e.gas));
        item["start_ms"] = e.start_ms;
        item["end_ms"] = e.end_ms ? nlohmann::ordered_json(*e.end_ms) : nlohmann::ordered_json(nullptr);
        item["peak_ppm"] = e.peak_ppm;
        out.push_back(std::move(item));
    }
    return out.dump();
}

std::string encode_device_list(const std::vector<std::string>& devices) {
    return nlohmann::json(devices).dump();
}

}  // namespace gasguard
