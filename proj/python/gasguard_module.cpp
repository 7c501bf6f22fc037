// Python bindings for the core operations: sensor chain, firmware tick,
// frame codec, gateway store and the scenario harness.
#include <pybind11/functional.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gasguard/error.hpp"
#include "gasguard/firmware.hpp"
#include "gasguard/gateway.hpp"
#include "gasguard/gateway_server.hpp"
#include "gasguard/modem.hpp"
#include "gasguard/scenario.hpp"
#include "gasguard/sensor_model.hpp"
#include "gasguard/telemetry.hpp"

namespace py = pybind11;
using namespace gasguard;

namespace {

py::dict episode_dict(const AlarmEpisode& e) {
    py::dict d;
    d["device_id"] = e.device_id;
    d["gas"] = std::string(to_string(e.gas));
    d["start_ms"] = e.start_ms;
    d["end_ms"] = e.end_ms ? py::cast(*e.end_ms) : py::none();
    d["peak_ppm"] = e.peak_ppm;
    return d;
}

std::string effect_kind(const Effect& effect) {
    return std::visit(
        [](const auto& e) -> std::string {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, BuzzerSet>) return "buzzer";
            else if constexpr (std::is_same_v<T, LedSet>) return "led";
            else if constexpr (std::is_same_v<T, LcdSet>) return "lcd";
            else if constexpr (std::is_same_v<T, SmsSend>) return "sms";
            else return "telemetry";
        },
        effect);
}

}  // namespace

PYBIND11_MODULE(_gasguard, m) {
    m.doc() = "Gas leak monitor simulation core";

    auto base = py::register_exception<Error>(m, "GasguardError");
    py::register_exception<LoadError>(m, "LoadError", base);
    py::register_exception<FrameError>(m, "FrameError", base);
    py::register_exception<RecoveryError>(m, "RecoveryError", base);
    py::register_exception<StartupError>(m, "StartupError", base);
    py::register_exception<DomainError>(m, "DomainError", base);
    py::register_exception<SaturationError>(m, "SaturationError", base);
    py::register_exception<UsageError>(m, "UsageError", base);
    py::register_exception<ConfigError>(m, "ConfigError", base);

    py::enum_<GasSpecies>(m, "GasSpecies")
        .value("LPG", GasSpecies::LPG)
        .value("Propane", GasSpecies::Propane)
        .value("Methane", GasSpecies::Methane)
        .value("Butane", GasSpecies::Butane);
    py::enum_<Verdict>(m, "Verdict")
        .value("Over", Verdict::Over)
        .value("UnderClear", Verdict::UnderClear)
        .value("InBand", Verdict::InBand);
    py::enum_<AlarmState>(m, "AlarmState")
        .value("Normal", AlarmState::Normal)
        .value("Pending", AlarmState::Pending)
        .value("Alarmed", AlarmState::Alarmed)
        .value("Clearing", AlarmState::Clearing);

    py::class_<SensorModel>(m, "SensorModel")
        .def(py::init<>())
        .def_readwrite("r0", &SensorModel::r0)
        .def_readwrite("rl", &SensorModel::rl)
        .def_readwrite("vc", &SensorModel::vc)
        .def_readwrite("vref", &SensorModel::vref)
        .def_readwrite("adc_bits", &SensorModel::adc_bits)
        .def("full_scale_code", &SensorModel::full_scale_code);

    py::class_<SensorReading>(m, "SensorReading")
        .def_readonly("timestamp_ms", &SensorReading::timestamp_ms)
        .def_readonly("gas", &SensorReading::gas)
        .def_readonly("true_ppm", &SensorReading::true_ppm)
        .def_readonly("rs", &SensorReading::rs)
        .def_readonly("vout", &SensorReading::vout)
        .def_readonly("adc_code", &SensorReading::adc_code);

    m.def("sample", &sample, py::arg("true_ppm"), py::arg("gas"), py::arg("model") = SensorModel{},
          py::arg("timestamp_ms") = 0);
    m.def("estimate_ppm", &estimate_ppm, py::arg("adc_code"), py::arg("gas"), py::arg("model") = SensorModel{});
    m.def(
        "calibrate_r0",
        [](const std::vector<SensorReading>& readings, const SensorModel& model) {
            return calibrate_r0(readings, model);
        },
        py::arg("readings"), py::arg("model") = SensorModel{});

    py::class_<ThresholdTable>(m, "ThresholdTable")
        .def(py::init<>())
        .def_readwrite("hysteresis_fraction", &ThresholdTable::hysteresis_fraction)
        .def_readwrite("raise_count", &ThresholdTable::raise_count)
        .def_readwrite("clear_count", &ThresholdTable::clear_count)
        .def("threshold", [](const ThresholdTable& t, GasSpecies g) { return t.threshold_ppm[index_of(g)]; })
        .def("set_threshold",
             [](ThresholdTable& t, GasSpecies g, double ppm) { t.threshold_ppm[index_of(g)] = ppm; });
    m.def("evaluate_threshold", &evaluate_threshold, py::arg("estimate_ppm"), py::arg("gas"),
          py::arg("table") = ThresholdTable{});

    py::class_<FirmwareConfig>(m, "FirmwareConfig")
        .def(py::init<>())
        .def_readwrite("table", &FirmwareConfig::table)
        .def_readwrite("device_id", &FirmwareConfig::device_id)
        .def_readwrite("emergency_number", &FirmwareConfig::emergency_number)
        .def_readwrite("sms_repeat_ms", &FirmwareConfig::sms_repeat_ms);

    py::class_<FirmwareState>(m, "FirmwareState")
        .def(py::init<GasSpecies>(), py::arg("gas") = GasSpecies::LPG)
        .def_property_readonly("alarm_state", [](const FirmwareState& s) { return s.fsm.state; })
        .def_property_readonly("latched", [](const FirmwareState& s) { return s.fsm.latched(); })
        .def_readonly("last_estimate_ppm", &FirmwareState::last_estimate_ppm)
        .def_readonly("seq", &FirmwareState::seq)
        .def_readonly("buzzer_on", &FirmwareState::buzzer_on)
        .def_readonly("led_on", &FirmwareState::led_on)
        .def_property_readonly("lcd", [](const FirmwareState& s) { return py::make_tuple(s.lcd.first, s.lcd.second); });

    m.def(
        "tick",
        [](const FirmwareState& state, std::uint32_t adc_code, std::int64_t now_ms, const FirmwareConfig& config,
           const SensorModel& model) {
            TickResult r = tick(state, adc_code, now_ms, config, model);
            py::list effects;
            for (const Effect& e : r.effects) effects.append(py::make_tuple(effect_kind(e), describe(e)));
            return py::make_tuple(std::move(r.state), effects);
        },
        py::arg("state"), py::arg("adc_code"), py::arg("now_ms"), py::arg("config"), py::arg("model") = SensorModel{},
        "Advance the firmware one sample. Returns (new_state, [(kind, description), ...]).");

    py::class_<TelemetryRecord>(m, "TelemetryRecord")
        .def(py::init([](std::string device_id, std::uint64_t seq, std::int64_t timestamp_ms, GasSpecies gas,
                         std::int64_t ppm, std::int32_t adc_code, bool alarm) {
                 return TelemetryRecord{std::move(device_id), seq, timestamp_ms, gas, ppm, adc_code, alarm};
             }),
             py::arg("device_id"), py::arg("seq"), py::arg("timestamp_ms"), py::arg("gas"), py::arg("ppm"),
             py::arg("adc_code"), py::arg("alarm"))
        .def_readwrite("device_id", &TelemetryRecord::device_id)
        .def_readwrite("seq", &TelemetryRecord::seq)
        .def_readwrite("timestamp_ms", &TelemetryRecord::timestamp_ms)
        .def_readwrite("gas", &TelemetryRecord::gas)
        .def_readwrite("ppm", &TelemetryRecord::ppm)
        .def_readwrite("adc_code", &TelemetryRecord::adc_code)
        .def_readwrite("alarm", &TelemetryRecord::alarm)
        .def(py::self == py::self)
        .def("__repr__", [](const TelemetryRecord& r) { return "TelemetryRecord(" + encode_frame(r) + ")"; });
    m.def("encode_frame", &encode_frame);
    m.def("decode_frame", [](std::string_view line) { return decode_frame(line); });

    m.def("parse_at", [](std::string_view unit) { return serialize_command(parse_at(unit)); },
          "Parse one command unit and return its canonical serialization.");

    py::class_<Modem>(m, "Modem")
        .def(py::init<>())
        .def("feed", &Modem::feed, py::arg("data"), py::arg("now_ms") = 0)
        .def_property_readonly("outbox", [](const Modem& modem) {
            py::list out;
            for (const auto& msg : modem.outbox_snapshot()) out.append(py::make_tuple(msg.destination, msg.body));
            return out;
        });

    py::class_<TelemetryStore>(m, "TelemetryStore")
        .def(py::init<>())
        .def(
            "ingest",
            [](TelemetryStore& store, const TelemetryRecord& r) {
                return std::holds_alternative<StoreOffset>(ingest(store, r));
            },
            "True when stored, False for a replayed seq.")
        .def("handle_line", [](TelemetryStore& store, std::string_view line) { return handle_ingest_line(store, line); })
        .def("latest", [](const TelemetryStore& store, std::string_view dev) { return query_latest(store, dev); })
        .def("alarm_episodes",
             [](const TelemetryStore& store, std::string_view dev, std::int64_t from_ms, std::int64_t to_ms) {
                 py::list out;
                 for (const auto& e : query_alarm_episodes(store, dev, from_ms, to_ms)) out.append(episode_dict(e));
                 return out;
             })
        .def("devices", &TelemetryStore::devices)
        .def("records", [](const TelemetryStore& store) { return store.records(); })
        .def("status_page", [](const TelemetryStore& store) { return render_status_page(store); })
        .def("__len__", &TelemetryStore::size);

    m.def(
        "recover",
        [](const std::filesystem::path& path) {
            Recovered r = recover(path);
            return py::make_tuple(std::move(r.store), r.report.truncated_bytes);
        },
        py::arg("log_path"), "Open a persistent store. Returns (store, truncated_bytes).");

    py::class_<GatewayServer>(m, "GatewayServer")
        .def(py::init([](TelemetryStore& store, const std::string& ingest, const std::string& http) {
                 return std::make_unique<GatewayServer>(store, ListenAddress::parse(ingest), ListenAddress::parse(http));
             }),
             py::arg("store"), py::arg("listen_ingest") = "127.0.0.1:0", py::arg("listen_http") = "127.0.0.1:0",
             py::keep_alive<1, 2>())
        .def("start", &GatewayServer::start)
        .def("stop", &GatewayServer::stop, py::call_guard<py::gil_scoped_release>())
        .def_property_readonly("ingest_port", &GatewayServer::ingest_port)
        .def_property_readonly("http_port", &GatewayServer::http_port);

    py::class_<Scenario>(m, "Scenario")
        .def_readwrite("device_id", &Scenario::device_id)
        .def_readwrite("active_gas", &Scenario::active_gas)
        .def_readwrite("sample_period_ms", &Scenario::sample_period_ms)
        .def_readwrite("duration_ms", &Scenario::duration_ms)
        .def_readwrite("noise_sigma_ppm", &Scenario::noise_sigma_ppm)
        .def_readwrite("rng_seed", &Scenario::rng_seed)
        .def_readwrite("firmware", &Scenario::firmware)
        .def_readwrite("model", &Scenario::model);
    m.def("load_scenario", &load_scenario, py::arg("text"));
    m.def("load_scenario_file", &load_scenario_file, py::arg("path"));
    m.def("concentration_at", &concentration_at, py::arg("scenario"), py::arg("t_ms"), py::arg("tick_index"));

    py::class_<RunReport>(m, "RunReport")
        .def_readonly("ticks", &RunReport::ticks)
        .def_readonly("first_alarm_ms", &RunReport::first_alarm_ms)
        .def_readonly("alarm_latency_ms", &RunReport::alarm_latency_ms)
        .def_readonly("sms_sent", &RunReport::sms_sent)
        .def_readonly("records_persisted", &RunReport::records_persisted)
        .def_readonly("final_alarmed", &RunReport::final_alarmed)
        .def(py::self == py::self)
        .def("render", [](const RunReport& r, const std::string& format) {
            if (format != "text" && format != "machine") throw UsageError("format must be 'text' or 'machine'");
            return render_report(r, format == "text" ? ReportFormat::Text : ReportFormat::Machine);
        }, py::arg("format") = "text");
    m.def("parse_report", &parse_report);

    py::class_<RunResult>(m, "RunResult")
        .def_readonly("report", &RunResult::report)
        .def_readonly("event_log", &RunResult::event_log)
        .def_property_readonly("sms_bodies", [](const RunResult& r) {
            std::vector<std::string> out;
            for (const auto& msg : r.outbox) out.push_back(msg.body);
            return out;
        })
        .def_readonly("telemetry_emitted", &RunResult::telemetry_emitted)
        .def_readonly("telemetry_retained", &RunResult::telemetry_retained);

    m.def(
        "run",
        [](const Scenario& sc, TelemetryStore* store, std::optional<std::string> remote,
           std::vector<std::pair<std::int64_t, std::int64_t>> outages) {
            RunOptions options;
            options.store = store;
            if (remote) options.remote = ListenAddress::parse(*remote);
            options.channel_outages = std::move(outages);
            py::gil_scoped_release release;
            return run(sc, options);
        },
        py::arg("scenario"), py::arg("store") = nullptr, py::arg("remote") = std::nullopt,
        py::arg("outages") = std::vector<std::pair<std::int64_t, std::int64_t>>{});
}
