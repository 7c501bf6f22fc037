// gasguard: run leak scenarios, validate scenario files, or serve the gateway.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "gasguard/error.hpp"
#include "gasguard/gateway.hpp"
#include "gasguard/gateway_server.hpp"
#include "gasguard/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitLoad = 2;
constexpr int kExitRuntime = 3;

int cmd_validate(const std::string& file) {
    const gasguard::Scenario sc = gasguard::load_scenario_file(file);
    std::cout << file << ": ok (device=" << sc.device_id << ", gas=" << gasguard::to_string(sc.active_gas)
              << ", " << sc.segments.size() << " segments, " << sc.duration_ms << " ms)\n";
    return kExitOk;
}

int cmd_run(const std::string& file, const std::string& remote, const std::string& log_path,
            const std::string& report_format) {
    const gasguard::Scenario sc = gasguard::load_scenario_file(file);
    gasguard::RunOptions options;
    if (!remote.empty()) options.remote = gasguard::ListenAddress::parse(remote);

    const gasguard::RunResult result = gasguard::run(sc, options);
    if (!log_path.empty()) {
        std::ofstream out(log_path, std::ios::binary | std::ios::trunc);
        if (!out) throw gasguard::Error("cannot write event log " + log_path);
        out << result.event_log_text();
    }
    const auto format = report_format == "machine" ? gasguard::ReportFormat::Machine : gasguard::ReportFormat::Text;
    std::cout << gasguard::render_report(result.report, format);
    return kExitOk;
}

int cmd_gateway(const std::string& config_file, const std::string& ingest, const std::string& http,
                const std::string& log_path) {
    gasguard::GatewayConfig config;
    try {
        if (!config_file.empty()) config = gasguard::GatewayConfig::load(config_file);
        config.apply_environment();
        if (!ingest.empty()) config.ingest = gasguard::ListenAddress::parse(ingest);
        if (!http.empty()) config.http = gasguard::ListenAddress::parse(http);
        if (!log_path.empty()) config.log_path = log_path;
    } catch (const gasguard::ConfigError& e) {
        std::cerr << "gasguard: " << e.what() << '\n';
        return kExitLoad;
    }

    // Block termination signals before any thread starts so sigwait sees them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    std::unique_ptr<gasguard::TelemetryStore> store;
    if (config.log_path) {
        auto recovered = gasguard::recover(*config.log_path);
        std::cerr << "recovered " << recovered.report.records << " records from " << config.log_path->string();
        if (recovered.report.truncated()) {
            std::cerr << " (dropped " << recovered.report.truncated_bytes << " bytes of partial frame)";
        }
        std::cerr << '\n';
        store = std::move(recovered.store);
    } else {
        store = std::make_unique<gasguard::TelemetryStore>();
    }

    gasguard::GatewayServer server(*store, config.ingest, config.http);
    server.start();
    std::cout << "ingest listening on " << config.ingest.host << ':' << server.ingest_port() << '\n'
              << "http listening on " << config.http.host << ':' << server.http_port() << '\n'
              << std::flush;

    int received = 0;
    sigwait(&signals, &received);
    server.stop();
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gas leak detector simulator and telemetry gateway"};
    app.require_subcommand(1);

    std::string scenario_file, remote, log_path, report_format = "text";
    auto* run = app.add_subcommand("run", "Run a scenario through firmware, modem and gateway");
    run->add_option("scenario", scenario_file, "Scenario file")->required();
    run->add_option("--remote", remote, "Gateway ingest address host:port (default: in-process)");
    run->add_option("--log-path", log_path, "Write the event log to this file");
    run->add_option("--report", report_format, "Report format")->check(CLI::IsMember({"text", "machine"}));

    std::string validate_file;
    auto* validate = app.add_subcommand("validate", "Check a scenario file");
    validate->add_option("scenario", validate_file, "Scenario file")->required();

    std::string config_file, listen_ingest, listen_http, gw_log_path;
    auto* gateway = app.add_subcommand("gateway", "Serve the ingest socket and HTTP query endpoints");
    gateway->add_option("--config", config_file, "Gateway config file (key=value)");
    gateway->add_option("--listen-ingest", listen_ingest, "Ingest address host:port");
    gateway->add_option("--listen-http", listen_http, "HTTP address host:port");
    gateway->add_option("--log-path", gw_log_path, "Append-only record log (GASGW_LOG_PATH also works)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitLoad;
    }

    try {
        if (*validate) return cmd_validate(validate_file);
        if (*run) return cmd_run(scenario_file, remote, log_path, report_format);
        return cmd_gateway(config_file, listen_ingest, listen_http, gw_log_path);
    } catch (const gasguard::LoadError& e) {
        std::cerr << "gasguard: " << e.what() << '\n';
        return kExitLoad;
    } catch (const gasguard::ConfigError& e) {
        std::cerr << "gasguard: " << e.what() << '\n';
        return kExitLoad;
    } catch (const std::exception& e) {
        std::cerr << "gasguard: " << e.what() << '\n';
        return kExitRuntime;
    }
}
