#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "gasguard/gateway.hpp"
#include "gasguard/modem.hpp"

namespace gasguard {

struct ListenAddress {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;  // 0 picks an ephemeral port

    /// "host:port". Throws ConfigError.
    static ListenAddress parse(std::string_view text);
    std::string to_string() const { return host + ":" + std::to_string(port); }
};

/// Gateway settings. File format is key=value lines (listen_ingest,
/// listen_http, log_path); '#' starts a comment. GASGW_LOG_PATH overrides
/// log_path.
struct GatewayConfig {
    ListenAddress ingest{"127.0.0.1", 7878};
    ListenAddress http{"127.0.0.1", 8080};
    std::optional<std::filesystem::path> log_path;

    static GatewayConfig load(const std::filesystem::path& file);
    static GatewayConfig parse(std::string_view text);
    void apply_environment();
};

/// Line-oriented TCP ingest plus the HTTP query surface, both over one store.
class GatewayServer {
public:
    GatewayServer(TelemetryStore& store, ListenAddress ingest, ListenAddress http);
    ~GatewayServer();

    GatewayServer(const GatewayServer&) = delete;
    GatewayServer& operator=(const GatewayServer&) = delete;

    /// Binds both listeners and starts serving. Throws StartupError.
    void start();
    void stop();

    std::uint16_t ingest_port() const noexcept { return ingest_port_; }
    std::uint16_t http_port() const noexcept { return http_port_; }

private:
    struct Http;

    void accept_loop();
    void serve_connection(int fd);

    TelemetryStore& store_;
    ListenAddress ingest_addr_;
    ListenAddress http_addr_;
    std::unique_ptr<Http> http_;
    int listen_fd_ = -1;
    std::uint16_t ingest_port_ = 0;
    std::uint16_t http_port_ = 0;
    std::atomic<bool> running_{false};
    std::thread accept_thread_;
    std::thread http_thread_;
    std::mutex connections_mutex_;
    std::vector<int> connection_fds_;
    std::vector<std::thread> connection_threads_;
};

/// Data link that talks to a gateway ingest socket.
class TcpDataLink : public DataLink {
public:
    ~TcpDataLink() override;
    bool open(const std::string& host, std::uint16_t port) override;
    std::optional<std::string> send(std::string_view payload) override;
    void close() override;

private:
    int fd_ = -1;
    std::string buffer_;
};

/// Data link wired straight into a store through the ingest protocol.
class InProcessDataLink : public DataLink {
public:
    explicit InProcessDataLink(TelemetryStore& store) : store_(store) {}
    bool open(const std::string&, std::uint16_t) override { return reachable_; }
    std::optional<std::string> send(std::string_view payload) override;
    void close() override {}

    void set_reachable(bool reachable) { reachable_ = reachable; }

private:
    TelemetryStore& store_;
    bool reachable_ = true;
};

}  // namespace gasguard
