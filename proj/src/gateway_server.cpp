#include "gasguard/gateway_server.hpp"

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <httplib.h>

#include "gasguard/error.hpp"

namespace gasguard {

namespace {

constexpr std::size_t kMaxIngestLine = 4096;

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

bool send_all(int fd, std::string_view bytes) {
    while (!bytes.empty()) {
        const ssize_t n = ::send(fd, bytes.data(), bytes.size(), MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        bytes.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
}

std::optional<std::int64_t> query_int(const httplib::Request& req, const char* name, std::int64_t fallback) {
    if (!req.has_param(name)) return fallback;
    const std::string value = req.get_param_value(name);
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) return std::nullopt;
    return out;
}

}  // namespace

ListenAddress ListenAddress::parse(std::string_view text) {
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos || colon == 0) {
        throw ConfigError("listen address must be host:port, got '" + std::string(text) + "'");
    }
    ListenAddress out;
    out.host = std::string(text.substr(0, colon));
    const std::string_view port = text.substr(colon + 1);
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
    if (port.empty() || ec != std::errc{} || ptr != port.data() + port.size() || value > 65535) {
        throw ConfigError("bad port in '" + std::string(text) + "'");
    }
    out.port = static_cast<std::uint16_t>(value);
    return out;
}

GatewayConfig GatewayConfig::parse(std::string_view text) {
    GatewayConfig config;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(raw.substr(0, raw.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "listen_ingest") {
            config.ingest = ListenAddress::parse(value);
        } else if (key == "listen_http") {
            config.http = ListenAddress::parse(value);
        } else if (key == "log_path") {
            config.log_path = value;
        } else {
            throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    return config;
}

GatewayConfig GatewayConfig::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void GatewayConfig::apply_environment() {
    if (const char* env = std::getenv("GASGW_LOG_PATH"); env && *env) log_path = env;
}

struct GatewayServer::Http {
    httplib::Server server;
};

GatewayServer::GatewayServer(TelemetryStore& store, ListenAddress ingest, ListenAddress http)
    : store_(store), ingest_addr_(std::move(ingest)), http_addr_(std::move(http)), http_(std::make_unique<Http>()) {
    auto& svr = http_->server;

    svr.Get("/", [this](const httplib::Request&, httplib::Response& res) {
        res.set_content(render_status_page(store_), "text/html; charset=utf-8");
    });
    svr.Get("/devices", [this](const httplib::Request&, httplib::Response& res) {
        res.set_content(encode_device_list(store_.devices()), "application/json");
    });
    svr.Get(R"(/latest/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        auto record = query_latest(store_, req.matches[1].str());
        if (!record) {
            res.status = 404;
            res.set_content("not found\n", "text/plain");
            return;
        }
        res.set_content(encode_frame(*record), "application/x-ndjson");
    });
    svr.Get(R"(/alarms/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        auto from = query_int(req, "from", 0);
        auto to = query_int(req, "to", std::numeric_limits<std::int64_t>::max());
        if (!from || !to || *from > *to) {
            res.status = 400;
            res.set_content("bad range\n", "text/plain");
            return;
        }
        res.set_content(encode_episodes(query_alarm_episodes(store_, req.matches[1].str(), *from, *to)),
                        "application/json");
    });
}

GatewayServer::~GatewayServer() { stop(); }

void GatewayServer::start() {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* found = nullptr;
    const std::string port = std::to_string(ingest_addr_.port);
    if (::getaddrinfo(ingest_addr_.host.c_str(), port.c_str(), &hints, &found) != 0 || !found) {
        throw StartupError("cannot resolve ingest address " + ingest_addr_.to_string());
    }
    listen_fd_ = ::socket(found->ai_family, found->ai_socktype | SOCK_CLOEXEC, found->ai_protocol);
    int yes = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    const bool bound = listen_fd_ >= 0 && ::bind(listen_fd_, found->ai_addr, found->ai_addrlen) == 0 &&
                       ::listen(listen_fd_, 64) == 0;
    ::freeaddrinfo(found);
    if (!bound) {
        const std::string why = std::strerror(errno);
        if (listen_fd_ >= 0) ::close(listen_fd_);
        listen_fd_ = -1;
        throw StartupError("cannot listen on " + ingest_addr_.to_string() + ": " + why);
    }
    sockaddr_in bound_addr{};
    socklen_t len = sizeof bound_addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound_addr), &len);
    ingest_port_ = ntohs(bound_addr.sin_port);

    auto& svr = http_->server;
    if (http_addr_.port == 0) {
        const int port_no = svr.bind_to_any_port(http_addr_.host);
        if (port_no <= 0) throw StartupError("cannot listen on " + http_addr_.to_string());
        http_port_ = static_cast<std::uint16_t>(port_no);
    } else {
        if (!svr.bind_to_port(http_addr_.host, http_addr_.port)) {
            throw StartupError("cannot listen on " + http_addr_.to_string());
        }
        http_port_ = http_addr_.port;
    }

    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
    http_thread_ = std::thread([this] { http_->server.listen_after_bind(); });
    http_->server.wait_until_ready();
}

void GatewayServer::stop() {
    if (!running_.exchange(false)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    if (accept_thread_.joinable()) accept_thread_.join();
    ::close(listen_fd_);
    listen_fd_ = -1;

    {
        std::lock_guard lock(connections_mutex_);
        for (int fd : connection_fds_) ::shutdown(fd, SHUT_RDWR);
    }
    for (auto& t : connection_threads_) {
        if (t.joinable()) t.join();
    }
    connection_threads_.clear();

    http_->server.stop();
    if (http_thread_.joinable()) http_thread_.join();
}

void GatewayServer::accept_loop() {
    while (running_) {
        const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
        if (fd < 0) {
            if (errno == EINTR) continue;
            return;
        }
        int yes = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof yes);
        std::lock_guard lock(connections_mutex_);
        if (!running_) {
            ::close(fd);
            return;
        }
        connection_fds_.push_back(fd);
        connection_threads_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void GatewayServer::serve_connection(int fd) {
    std::string buffer;
    bool overflow = false;
    char chunk[4096];
    for (;;) {
        const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) break;
        buffer.append(chunk, static_cast<std::size_t>(n));

        std::size_t start = 0;
        for (auto nl = buffer.find('\n', start); nl != std::string::npos; nl = buffer.find('\n', start)) {
            std::string reply;
            if (overflow || nl - start + 1 > kMaxIngestLine) {
                reply = "ERR too_long\n";
                overflow = false;
            } else {
                reply = handle_ingest_line(store_, std::string_view(buffer).substr(start, nl - start + 1));
            }
            start = nl + 1;
            if (!send_all(fd, reply)) goto done;
        }
        buffer.erase(0, start);
        if (buffer.size() > kMaxIngestLine) {
            buffer.clear();
            overflow = true;
        }
    }
done:
    std::lock_guard lock(connections_mutex_);
    std::erase(connection_fds_, fd);
    ::close(fd);
}

TcpDataLink::~TcpDataLink() { close(); }

bool TcpDataLink::open(const std::string& host, std::uint16_t port) {
    close();
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* found = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &found) != 0) return false;
    for (addrinfo* ai = found; ai; ai = ai->ai_next) {
        const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
            fd_ = fd;
            break;
        }
        ::close(fd);
    }
    ::freeaddrinfo(found);
    if (fd_ < 0) return false;
    int yes = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof yes);
    timeval timeout{5, 0};
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &timeout, sizeof timeout);
    return true;
}

std::optional<std::string> TcpDataLink::send(std::string_view payload) {
    if (fd_ < 0 || !send_all(fd_, payload)) return std::nullopt;
    char chunk[512];
    for (;;) {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string reply = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return reply;
        }
        const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) return std::nullopt;
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

void TcpDataLink::close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
    buffer_.clear();
}

std::optional<std::string> InProcessDataLink::send(std::string_view payload) {
    if (!reachable_) return std::nullopt;
    std::string reply = handle_ingest_line(store_, payload);
    reply.pop_back();
    return reply;
}

}  // namespace gasguard
