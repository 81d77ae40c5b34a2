#include "watt/cli/app.hpp"

#include "watt/api/meter_forecast.hpp"
#include "watt/api/server.hpp"
#include "watt/api/service.hpp"
#include "watt/common/errors.hpp"
#include "watt/common/io.hpp"
#include "watt/common/time_format.hpp"
#include "watt/forecast/csv.hpp"
#include "watt/forecast/pipeline.hpp"
#include "watt/ledger/ledger.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <condition_variable>
#include <csignal>
#include <climits>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace watt::cli {

namespace {

using nlohmann::ordered_json;

// Bad flag values and missing inputs; exit code 2.
class UsageError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

enum class Format { text, json, csv };

std::string rupees(std::int64_t paise) {
    const auto a = paise < 0 ? -paise : paise;
    std::ostringstream s;
    s << (paise < 0 ? "-" : "") << a / 100 << '.' << (a % 100 < 10 ? "0" : "") << a % 100;
    return s.str();
}

std::int64_t parse_time_arg(const std::string& text, const std::string& what) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec == std::errc() && ptr == text.data() + text.size()) return v;
    try {
        return parse_iso8601(text);
    } catch (const ValidationError&) {
        throw UsageError(what + ": '" + text + "' is neither epoch ms nor an ISO-8601 time");
    }
}

billing::Period parse_period_arg(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw UsageError("--period must be START,END");
    billing::Period p{parse_time_arg(text.substr(0, comma), "--period"), parse_time_arg(text.substr(comma + 1), "--period")};
    if (p.end_ms <= p.start_ms) throw UsageError("--period must end after it starts");
    return p;
}

std::string csv_hex(const std::optional<ledger::Hash32>& h) { return h ? ledger::to_hex(*h) : std::string(); }

// Options shared by the subcommands.
struct Common {
    std::string format = "text";
    std::string data_dir;
    std::string config;
    std::optional<ScenarioConfig> scenario;

    Format fmt() const {
        if (format == "json") return Format::json;
        if (format == "csv") return Format::csv;
        return Format::text;
    }

    void load() {
        if (!config.empty()) scenario = load_scenario(config);
    }

    // --data-dir, else WATT_DATA_DIR.
    std::optional<std::filesystem::path> data_dir_or_env() const {
        if (!data_dir.empty()) return std::filesystem::path(data_dir);
        if (const char* env = std::getenv("WATT_DATA_DIR"); env && *env) return std::filesystem::path(env);
        return std::nullopt;
    }

    std::filesystem::path existing_store() const {
        const auto dir = data_dir_or_env();
        if (!dir) throw UsageError("no data directory: pass --data-dir or set WATT_DATA_DIR");
        if (!std::filesystem::is_directory(*dir)) throw UsageError("no store at " + dir->string());
        return *dir;
    }
};

api::ServiceConfig service_config(const std::optional<ScenarioConfig>& scenario,
                                  std::optional<std::filesystem::path> dir) {
    api::ServiceConfig c;
    c.data_dir = std::move(dir);
    if (scenario) {
        c.ledger.opening_balances = scenario->accounts;
        c.billing.utility_account = scenario->utility_account;
        for (const auto& m : scenario->meters) {
            if (m.account) c.billing.meter_accounts[m.meter_id] = *m.account;
        }
        c.tariff_file = scenario->tariff_file;
    }
    return c;
}

// ---- simulate ----

struct SimulateArgs {
    std::string scenario;
    std::string out_path;
    std::string url;
};

int cmd_simulate(const Common& common, const SimulateArgs& a, std::ostream& out) {
    const auto scenario = load_scenario(a.scenario);
    std::size_t count = 0;
    std::string sink;
    if (!a.out_path.empty()) {
        std::ofstream file(a.out_path, std::ios::binary | std::ios::trunc);
        if (!file) throw UsageError("cannot write " + a.out_path);
        run_simulation(scenario, [&](const metersim::MeterReading& r) {
            file << metersim::to_ndjson_line(r) << '\n';
            ++count;
        });
        file.flush();
        if (!file) throw Error("write failed for " + a.out_path);
        sink = a.out_path;
    } else if (!a.url.empty()) {
        httplib::Client client(a.url);
        if (!client.is_valid()) throw UsageError("cannot use url " + a.url);
        client.set_connection_timeout(5);
        run_simulation(scenario, [&](const metersim::MeterReading& r) {
            const auto res = client.Post("/api/v1/readings", metersim::to_json(r).dump(), "application/json");
            if (!res) throw Error("cannot reach " + a.url + ": " + httplib::to_string(res.error()));
            if (res->status != 200) {
                throw Error("service rejected a reading (" + std::to_string(res->status) + "): " + res->body);
            }
            ++count;
        });
        sink = a.url;
    } else {
        const auto dir = common.data_dir_or_env();
        if (!dir) throw UsageError("simulate needs --out, --url or a data directory");
        api::Service service(service_config(scenario, *dir));
        for (const auto& m : scenario.meters) service.store().register_meter(m.meter_id);
        run_simulation(scenario, [&](const metersim::MeterReading& r) {
            service.store().submit_reading(r);
            ++count;
        });
        sink = dir->string();
    }
    if (common.fmt() == Format::json) {
        out << ordered_json{{"readings", count}, {"meters", scenario.meters.size()}, {"sink", sink}}.dump() << '\n';
    } else {
        out << "simulated " << count << " readings from " << scenario.meters.size() << " meters into " << sink
            << '\n';
    }
    return kExitOk;
}

// ---- bill ----

struct BillArgs {
    std::string period;
    std::string tariff;
    std::string now;
    std::string pay;
    std::string payer;
};

void print_invoices(const std::vector<billing::Invoice>& invoices, Format fmt, std::ostream& out,
                    const std::optional<ledger::Block>& block, bool with_block) {
    if (fmt == Format::json) {
        ordered_json list = ordered_json::array();
        for (const auto& inv : invoices) list.push_back(billing::to_json(inv));
        ordered_json j{{"invoices", std::move(list)}};
        if (with_block) j["block"] = block ? ledger::to_json(*block) : ordered_json(nullptr);
        out << j.dump(2) << '\n';
        return;
    }
    if (fmt == Format::csv) {
        out << "invoice_id,meter_id,period_start,period_end,tariff,kwh_billed,total_paise,status,issue_block,"
               "payment_tx\n";
        for (const auto& inv : invoices) {
            out << inv.invoice_id << ',' << inv.meter_id << ',' << format_iso8601(inv.period.start_ms) << ','
                << format_iso8601(inv.period.end_ms) << ',' << inv.tariff << ',' << format_double(inv.kwh_billed)
                << ',' << inv.total_paise << ',' << billing::to_string(inv.status) << ','
                << (inv.issue_block ? std::to_string(*inv.issue_block) : "") << ',' << csv_hex(inv.payment_tx)
                << '\n';
        }
        return;
    }
    for (const auto& inv : invoices) {
        out << inv.invoice_id << "  meter " << inv.meter_id << "  " << format_iso8601(inv.period.start_ms) << " to "
            << format_iso8601(inv.period.end_ms) << "  " << format_double(inv.kwh_billed) << " kWh  " << inv.tariff
            << "  Rs " << rupees(inv.total_paise) << "  " << billing::to_string(inv.status) << '\n';
        for (const auto& line : inv.lines) out << "    " << line.head << "  Rs " << rupees(line.amount_paise) << '\n';
    }
    if (with_block) {
        if (block) {
            out << "block " << block->index << "  " << block->transactions.size() << " transactions  "
                << ledger::to_hex(block->hash) << '\n';
        } else {
            out << "no new block: every invoice was already issued\n";
        }
    }
}

int cmd_bill(const Common& common, const BillArgs& a, std::ostream& out) {
    const auto dir = common.existing_store();
    auto config = service_config(common.scenario, dir);
    if (!a.now.empty()) {
        const auto now = parse_time_arg(a.now, "--now");
        config.clock = [now] { return now; };
    }
    api::Service service(std::move(config));

    if (!a.pay.empty()) {
        const auto payer = a.payer.empty() ? service.billing().invoice(a.pay).account : a.payer;
        const auto receipt = service.billing().pay_invoice(a.pay, payer, service.now());
        if (common.fmt() == Format::json) {
            out << billing::to_json(receipt).dump(2) << '\n';
        } else if (common.fmt() == Format::csv) {
            out << "invoice_id,tx_id,gas,block_index,block_hash,amount_paise\n"
                << receipt.invoice_id << ',' << ledger::to_hex(receipt.tx_id) << ',' << receipt.gas << ','
                << receipt.block_index << ',' << ledger::to_hex(receipt.block_hash) << ',' << receipt.amount_paise
                << '\n';
        } else {
            out << "paid " << receipt.invoice_id << "  Rs " << rupees(receipt.amount_paise) << " from " << payer
                << "\ntx " << ledger::to_hex(receipt.tx_id) << "  gas " << receipt.gas << "\nblock "
                << receipt.block_index << "  " << ledger::to_hex(receipt.block_hash) << '\n';
        }
        return kExitOk;
    }

    if (a.period.empty()) {
        // Listing only.
        print_invoices(service.billing().invoices(), common.fmt(), out, std::nullopt, false);
        return kExitOk;
    }
    const auto period = parse_period_arg(a.period);
    const auto tariff_name = !a.tariff.empty() ? a.tariff : common.scenario ? common.scenario->tariff : "state";
    const auto& tariff = service.tariffs().get(tariff_name);
    const auto run = service.billing().run_billing_cycle(period, tariff, service.now());
    print_invoices(run.invoices, common.fmt(), out, run.block, true);
    return kExitOk;
}

// ---- ledger ----

void print_blocks(const std::vector<ledger::Block>& blocks, Format fmt, std::ostream& out) {
    if (fmt == Format::json) {
        ordered_json list = ordered_json::array();
        for (const auto& b : blocks) list.push_back(ledger::to_json(b));
        out << list.dump(2) << '\n';
        return;
    }
    if (fmt == Format::csv) out << "index,timestamp,tx_count,gas_total,prev_hash,hash\n";
    for (const auto& b : blocks) {
        if (fmt == Format::csv) {
            out << b.index << ',' << format_iso8601(b.timestamp_ms) << ',' << b.transactions.size() << ','
                << b.gas_total << ',' << ledger::to_hex(b.prev_hash) << ',' << ledger::to_hex(b.hash) << '\n';
            continue;
        }
        out << "block " << b.index << "  " << format_iso8601(b.timestamp_ms) << "  " << b.transactions.size()
            << " tx  gas " << b.gas_total << "  " << ledger::to_hex(b.hash) << '\n';
        for (const auto& tx : b.transactions) {
            out << "    " << ledger::to_hex(tx.tx_id) << "  " << tx.from_account << " -> " << tx.to_account << "  Rs "
                << rupees(static_cast<std::int64_t>(tx.amount_paise)) << "  gas " << tx.gas << '\n';
        }
    }
}

int cmd_ledger(const Common& common, const std::string& action, std::ostream& out) {
    const auto path = common.existing_store() / "ledger" / "chain.ndjson";
    if (!std::filesystem::exists(path)) throw UsageError("no chain at " + path.string());
    if (action == "verify") {
        const auto v = ledger::verify_chain_file(path);
        if (common.fmt() == Format::json) {
            out << ordered_json{{"ok", v.ok},
                                {"first_bad_index",
                                 v.first_bad_index ? ordered_json(*v.first_bad_index) : ordered_json(nullptr)},
                                {"reason", v.reason}}
                       .dump()
                << '\n';
        } else if (common.fmt() == Format::csv) {
            out << "ok,first_bad_index,reason\n"
                << (v.ok ? "true" : "false") << ','
                << (v.first_bad_index ? std::to_string(*v.first_bad_index) : "") << ",\"" << v.reason << "\"\n";
        } else if (v.ok) {
            out << "ok\n";
        } else {
            out << "bad index " << v.first_bad_index.value_or(0) << ": " << v.reason << '\n';
        }
        return v.ok ? kExitOk : kExitFailure;
    }
    const auto file = ledger::read_chain_file(path);
    print_blocks(file.blocks, common.fmt(), out);
    if (file.unreadable_index) {
        throw CorruptDataError("unreadable block record at index " + std::to_string(*file.unreadable_index));
    }
    return kExitOk;
}

// ---- forecast ----

struct ForecastArgs {
    std::string meter;
    std::string input;
    std::string holidays;
    std::string model_config;
    std::string save_model;
    double horizon_hours = 24.0;
    std::int64_t step_ms = kMillisPerHour;
};

int cmd_forecast(const Common& common, const ForecastArgs& a, std::ostream& out) {
    if (a.horizon_hours < 0) throw UsageError("--horizon-hours must not be negative");
    if (a.step_ms <= 0) throw UsageError("--step-ms must be positive");
    if (a.meter.empty() == a.input.empty()) throw UsageError("forecast needs exactly one of --meter or --input");
    const auto horizon = static_cast<std::int64_t>(std::llround(a.horizon_hours * static_cast<double>(kMillisPerHour)));

    std::optional<forecast::ModelConfig> config;
    if (!a.model_config.empty()) {
        const auto j = nlohmann::json::parse(read_file(a.model_config), nullptr, false);
        if (j.is_discarded()) throw UsageError(a.model_config + ": not valid JSON");
        config = forecast::model_config_from_json(j);
    }
    if (!a.holidays.empty()) {
        if (!config) config.emplace();
        for (auto& h : forecast::read_holidays_csv(a.holidays)) config->holidays.push_back(std::move(h));
    }

    forecast::FitResult fitted;
    std::vector<forecast::ForecastRow> rows;
    if (!a.meter.empty()) {
        ingest::Store store(common.existing_store() / "readings");
        api::MeterForecastOptions options;
        options.step_ms = a.step_ms;
        options.config = config;
        auto fc = api::forecast_meter(store, a.meter, horizon, options);
        fitted = std::move(fc.fit);
        rows = std::move(fc.rows);
    } else {
        const auto data = forecast::read_forecast_csv(a.input);
        // Trailing rows without y are the times to predict.
        std::size_t n_train = data.y.size();
        while (n_train > 0 && !data.y.values[n_train - 1]) --n_train;
        if (n_train < 2) throw ValidationError(a.input + ": needs at least two observed rows");
        TimeSeries train;
        forecast::Regressors train_regs;
        forecast::Regressors future_regs;
        std::vector<std::int64_t> future;
        for (std::size_t i = 0; i < data.y.size(); ++i) {
            if (i < n_train) {
                train.push_back(data.y.timestamps[i], data.y.values[i]);
            } else {
                future.push_back(data.y.timestamps[i]);
            }
        }
        for (const auto& [name, values] : data.regressors) {
            train_regs[name].assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(n_train));
            future_regs[name].assign(values.begin() + static_cast<std::ptrdiff_t>(n_train), values.end());
        }
        train = forecast::impute(train, forecast::ImputeMethod::linear_interpolation);
        train = forecast::impute(train, forecast::ImputeMethod::backward_fill);
        if (!config) {
            config.emplace();
            config->seasonalities = forecast::auto_seasonalities(
                forecast::default_seasonalities(), train.timestamps.back() - train.timestamps.front(),
                (train.timestamps.back() - train.timestamps.front()) / static_cast<std::int64_t>(train.size() - 1));
        }
        if (config->regressors.empty()) {
            for (const auto& [name, values] : data.regressors) config->regressors.push_back(name);
        }
        fitted = forecast::fit(*config, train, train_regs);
        if (future.empty()) {
            future = forecast::future_times(train.timestamps.back(), a.step_ms, horizon);
            if (!future.empty() && !config->regressors.empty()) {
                throw UsageError("future regressor values are needed: add rows with an empty y to the input");
            }
        }
        rows = forecast::predict(fitted.model, future, future_regs);
    }

    if (!a.save_model.empty()) write_file_atomic(a.save_model, forecast::to_json(fitted.model).dump(2) + "\n");
    if (common.fmt() == Format::json) {
        ordered_json list = ordered_json::array();
        for (const auto& r : rows) list.push_back(forecast::to_json(r));
        out << ordered_json{{"in_sample_rmse", fitted.in_sample_rmse}, {"rows", std::move(list)}}.dump(2) << '\n';
    } else {
        out << forecast::forecast_csv(rows);
    }
    return kExitOk;
}

// ---- export ----

struct ExportArgs {
    std::string what;
    std::string meter;
    std::string from;
    std::string to;
    std::string field;
    std::string agg;
    std::int64_t step_ms = 0;
};

int cmd_export(const Common& common, const ExportArgs& a, std::ostream& out) {
    const auto dir = common.existing_store();
    const auto fmt = common.fmt() == Format::text ? Format::csv : common.fmt();
    if (a.what == "chain") {
        const auto path = dir / "ledger" / "chain.ndjson";
        if (!std::filesystem::exists(path)) throw UsageError("no chain at " + path.string());
        print_blocks(ledger::read_chain_file(path).blocks, fmt, out);
        return kExitOk;
    }
    if (a.what == "invoices") {
        ingest::Store store;
        ledger::Ledger ledger(dir / "ledger");
        billing::BillingService billing(store, ledger, {}, dir / "billing");
        print_invoices(billing.invoices(), fmt, out, std::nullopt, false);
        return kExitOk;
    }
    if (a.meter.empty()) throw UsageError("export readings needs --meter");
    ingest::Store store(dir / "readings");
    const auto range = store.time_range(a.meter);
    if (a.step_ms <= 0 && a.field.empty() && a.agg.empty()) {
        const auto from = a.from.empty() ? INT64_MIN : parse_time_arg(a.from, "--from");
        const auto to = a.to.empty() ? INT64_MAX : parse_time_arg(a.to, "--to");
        const auto records = store.records(a.meter, from, to);
        if (fmt == Format::json) {
            for (const auto& r : records) out << ingest::to_json(r).dump() << '\n';
            return kExitOk;
        }
        out << "meter_id,timestamp_ms,v_rms,i_rms,apparent_power,kwh_total,store_offset\n";
        for (const auto& rec : records) {
            const auto& r = rec.reading;
            out << r.meter_id << ',' << r.timestamp_ms << ',' << format_double(r.v_rms) << ','
                << format_double(r.i_rms) << ',' << format_double(r.apparent_power) << ','
                << format_double(r.kwh_total) << ',' << rec.store_offset << '\n';
        }
        return kExitOk;
    }
    ingest::SeriesQuery q;
    q.meter_id = a.meter;
    if (!a.field.empty()) q.field = ingest::parse_field(a.field);
    if (!a.agg.empty()) q.agg = parse_aggregation(a.agg);
    if (a.step_ms > 0) q.step_ms = a.step_ms;
    TimeSeries series;
    if (range || (!a.from.empty() && !a.to.empty())) {
        q.from_ms = a.from.empty() ? range->first : parse_time_arg(a.from, "--from");
        q.to_ms = a.to.empty() ? range->second + 1 : parse_time_arg(a.to, "--to");
        series = store.query_series(q);
    }
    if (fmt == Format::json) {
        ordered_json values = ordered_json::array();
        for (const auto& v : series.values) values.push_back(v ? ordered_json(*v) : ordered_json(nullptr));
        out << ordered_json{{"meter_id", a.meter},
                            {"field", ingest::to_string(q.field)},
                            {"timestamps", series.timestamps},
                            {"values", std::move(values)}}
                   .dump()
            << '\n';
        return kExitOk;
    }
    out << "ds," << ingest::to_string(q.field) << '\n';
    for (std::size_t i = 0; i < series.size(); ++i) {
        out << format_iso8601(series.timestamps[i]) << ','
            << (series.values[i] ? format_double(*series.values[i]) : std::string()) << '\n';
    }
    return kExitOk;
}

// ---- serve ----

std::atomic<bool> g_signalled{false};

extern "C" void on_signal(int) { g_signalled.store(true); }

// Steps a fleet in wall-clock time and feeds the store.
class LiveSimulation {
public:
    LiveSimulation(const ScenarioConfig& scenario, api::Service& service, double speed, std::ostream& log)
        : fleet_(scenario.seed, scenario.meter_specs()), service_(service), log_(log) {
        interval_ = scenario.interval_ms;
        sleep_ = std::chrono::microseconds(static_cast<std::int64_t>(1000.0 * static_cast<double>(interval_) / speed));
        next_ = bucket_floor(now_millis(), interval_);
        for (const auto& m : scenario.meters) {
            service.store().register_meter(m.meter_id);
            if (const auto r = service.store().time_range(m.meter_id)) {
                next_ = std::max(next_, r->second + interval_);
                fleet_.resume_energy(m.meter_id, service.store().latest(m.meter_id)->reading.kwh_total);
            }
        }
        service.attach_fleet(&fleet_);
        thread_ = std::thread([this] { loop(); });
    }

    ~LiveSimulation() {
        {
            std::lock_guard lock(mutex_);
            stopping_ = true;
        }
        wake_.notify_all();
        thread_.join();
        service_.attach_fleet(nullptr);
    }

private:
    void loop() {
        std::unique_lock lock(mutex_);
        while (!stopping_) {
            lock.unlock();
            try {
                for (const auto& r : fleet_.step(next_)) service_.store().submit_reading(r);
            } catch (const Error& e) {
                log_ << "simulation step failed: " << e.what() << '\n';
            }
            next_ += interval_;
            lock.lock();
            wake_.wait_for(lock, sleep_, [this] { return stopping_; });
        }
    }

    metersim::Fleet fleet_;
    api::Service& service_;
    std::ostream& log_;
    std::int64_t interval_ = 0;
    std::int64_t next_ = 0;
    std::chrono::microseconds sleep_{0};
    std::mutex mutex_;
    std::condition_variable wake_;
    bool stopping_ = false;
    std::thread thread_;
};

} // namespace

void serve(const ServeOptions& options, const std::atomic<bool>& stop, std::ostream& log,
           std::atomic<int>* bound_port) {
    if (options.simulate && !options.scenario) throw UsageError("--simulate needs --config with a scenario");
    if (!(options.speed > 0.0)) throw UsageError("--speed must be positive");
    api::Service service(service_config(options.scenario, options.data_dir));
    if (options.scenario) {
        for (const auto& m : options.scenario->meters) service.store().register_meter(m.meter_id);
    }
    api::HttpServer server(service);
    const int port = server.bind(options.host, options.port);
    server.start();
    if (bound_port) bound_port->store(port);
    log << "serving on " << options.host << ':' << port
        << (options.data_dir ? " with data in " + options.data_dir->string() : std::string(" in memory")) << '\n';
    {
        std::optional<LiveSimulation> live;
        if (options.simulate) live.emplace(*options.scenario, service, options.speed, log);
        while (!stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    server.stop();
    log << "stopped\n";
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Smart meter simulation, telemetry, hash-chained billing and consumption forecasting"};
    app.name(args.empty() ? "watt" : std::filesystem::path(args[0]).filename().string());
    app.require_subcommand(1);
    app.fallthrough();

    Common common;
    app.add_option("--format", common.format, "Output format")
        ->check(CLI::IsMember({"text", "json", "csv"}))
        ->capture_default_str();
    app.add_option("--data-dir", common.data_dir, "Store directory (default: $WATT_DATA_DIR)");
    app.add_option("--config", common.config, "Scenario/config JSON file");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Run a scenario and stream its readings to a sink");
    simulate->add_option("scenario", sim.scenario, "Scenario JSON file")->required();
    auto* out_opt = simulate->add_option("--out", sim.out_path, "Write NDJSON readings to this file");
    simulate->add_option("--url", sim.url, "POST readings to a running service, e.g. http://127.0.0.1:8080")
        ->excludes(out_opt);

    ServeOptions serve_opts;
    std::string host = "0.0.0.0";
    int port = 0;
    bool live = false;
    double speed = 1.0;
    auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API (port: --port or $WATT_PORT, default 8080)");
    serve_cmd->add_option("--host", host, "Listen address")->capture_default_str();
    serve_cmd->add_option("--port", port, "Listen port")->check(CLI::Range(0, 65535));
    serve_cmd->add_flag("--simulate", live, "Step the --config scenario's fleet live and ingest its readings");
    serve_cmd->add_option("--speed", speed, "Simulated intervals per real interval")->capture_default_str();

    BillArgs bill;
    auto* bill_cmd = app.add_subcommand("bill", "Run a billing cycle, pay an invoice, or list invoices");
    auto* period_opt = bill_cmd->add_option("--period", bill.period, "START,END as epoch ms or ISO-8601");
    bill_cmd->add_option("--tariff", bill.tariff, "Tariff name (default: config tariff, else state)");
    bill_cmd->add_option("--now", bill.now, "Override the current time (epoch ms or ISO-8601)");
    bill_cmd->add_option("--pay", bill.pay, "Invoice id to pay")->excludes(period_opt);
    bill_cmd->add_option("--payer", bill.payer, "Paying account (default: the invoice's account)");

    std::string ledger_action;
    auto* ledger_cmd = app.add_subcommand("ledger", "Verify or show the chain");
    ledger_cmd->add_option("action", ledger_action, "verify or show")
        ->required()
        ->check(CLI::IsMember({"verify", "show"}));

    ForecastArgs fc;
    auto* forecast_cmd = app.add_subcommand("forecast", "Fit and print a forecast as CSV of components");
    forecast_cmd->add_option("--meter", fc.meter, "Meter in the store to forecast");
    forecast_cmd->add_option("--input", fc.input, "CSV with ds,y[,regressors...]; trailing empty y rows are predicted");
    forecast_cmd->add_option("--horizon-hours", fc.horizon_hours, "Forecast horizon")->capture_default_str();
    forecast_cmd->add_option("--step-ms", fc.step_ms, "Bucket and forecast step")->capture_default_str();
    forecast_cmd->add_option("--holidays", fc.holidays, "CSV holiday,ds,lower_window,upper_window");
    forecast_cmd->add_option("--model-config", fc.model_config, "Model configuration JSON");
    forecast_cmd->add_option("--save-model", fc.save_model, "Write the fitted model JSON here");

    ExportArgs ex;
    auto* export_cmd = app.add_subcommand("export", "Export readings, invoices or the chain");
    export_cmd->add_option("what", ex.what, "readings, invoices or chain")
        ->required()
        ->check(CLI::IsMember({"readings", "invoices", "chain"}));
    export_cmd->add_option("--meter", ex.meter, "Meter for readings");
    export_cmd->add_option("--from", ex.from, "Start (inclusive)");
    export_cmd->add_option("--to", ex.to, "End (exclusive)");
    export_cmd->add_option("--step-ms", ex.step_ms, "Resample into buckets of this width");
    export_cmd->add_option("--agg", ex.agg, "mean, max, last or sum");
    export_cmd->add_option("--field", ex.field, "apparent_power, kwh_total, v_rms or i_rms");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        common.load();
        if (simulate->parsed()) return cmd_simulate(common, sim, out);
        if (bill_cmd->parsed()) return cmd_bill(common, bill, out);
        if (ledger_cmd->parsed()) return cmd_ledger(common, ledger_action, out);
        if (forecast_cmd->parsed()) return cmd_forecast(common, fc, out);
        if (export_cmd->parsed()) return cmd_export(common, ex, out);
        if (serve_cmd->parsed()) {
            serve_opts.host = host;
            serve_opts.port = 8080;
            if (const char* env = std::getenv("WATT_PORT"); env && *env) {
                try {
                    serve_opts.port = std::stoi(env);
                } catch (const std::exception&) {
                    throw UsageError(std::string("WATT_PORT is not a port number: ") + env);
                }
            }
            if (serve_cmd->count("--port") > 0) serve_opts.port = port;
            serve_opts.data_dir = common.data_dir_or_env();
            serve_opts.scenario = common.scenario;
            serve_opts.simulate = live;
            serve_opts.speed = speed;
            g_signalled.store(false);
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            serve(serve_opts, g_signalled, err);
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

} // namespace watt::cli
