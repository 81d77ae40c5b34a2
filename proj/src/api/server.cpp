#include "watt/api/server.hpp"

#include "watt/api/meter_forecast.hpp"
#include "watt/common/errors.hpp"
#include "watt/common/time_format.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <climits>
#include <cmath>

namespace watt::api {

using nlohmann::ordered_json;

ErrorStatus status_for(const std::exception& e) {
    if (dynamic_cast<const ValidationError*>(&e)) return {400, "validation"};
    if (dynamic_cast<const DomainError*>(&e)) return {400, "domain"};
    if (dynamic_cast<const ConfigError*>(&e)) return {400, "config"};
    if (dynamic_cast<const NotFoundError*>(&e)) return {404, "not_found"};
    if (dynamic_cast<const OrderingError*>(&e)) return {409, "ordering"};
    if (dynamic_cast<const ClockRegressionError*>(&e)) return {409, "clock_regression"};
    if (dynamic_cast<const ConflictError*>(&e)) return {409, "conflict"};
    if (dynamic_cast<const PreconditionError*>(&e)) return {412, "precondition"};
    if (dynamic_cast<const InsufficientBalanceError*>(&e)) return {422, "insufficient_balance"};
    if (dynamic_cast<const nlohmann::json::exception*>(&e)) return {400, "validation"};
    return {500, "internal"};
}

namespace {

void send_json(httplib::Response& res, const ordered_json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& kind, const std::string& message) {
    send_json(res, {{"error", kind}, {"message", message}}, status);
}

// Integer milliseconds or an ISO-8601 UTC timestamp.
std::int64_t parse_time(std::string_view text, const std::string& what) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec == std::errc() && ptr == text.data() + text.size()) return v;
    try {
        return parse_iso8601(text);
    } catch (const ValidationError&) {
        throw ValidationError(what + ": '" + std::string(text) + "' is neither epoch ms nor an ISO-8601 time");
    }
}

std::int64_t time_from_json(const nlohmann::json& j, const std::string& what) {
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_string()) return parse_time(j.get<std::string>(), what);
    throw ValidationError(what + " must be epoch ms or an ISO-8601 string");
}

double parse_number(const std::string& text, const std::string& what) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
        throw ValidationError(what + " must be a number");
    }
    return v;
}

std::optional<std::string> param(const httplib::Request& req, const char* name) {
    if (!req.has_param(name)) return std::nullopt;
    return req.get_param_value(name);
}

std::optional<std::int64_t> time_param(const httplib::Request& req, const char* name) {
    const auto p = param(req, name);
    if (!p) return std::nullopt;
    return parse_time(*p, name);
}

// "start,end" with each side epoch ms or ISO-8601.
billing::Period parse_period(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw ValidationError("period must be 'start,end'");
    billing::Period p{parse_time(std::string_view(text).substr(0, comma), "period start"),
                      parse_time(std::string_view(text).substr(comma + 1), "period end")};
    p.validate();
    return p;
}

nlohmann::json parse_body(const httplib::Request& req) {
    auto j = nlohmann::json::parse(req.body.empty() ? std::string("{}") : req.body, nullptr, false);
    if (j.is_discarded()) throw ValidationError("request body is not valid JSON");
    if (!j.is_object()) throw ValidationError("request body must be a JSON object");
    return j;
}

ordered_json series_json(const std::string& meter_id, const ingest::SeriesQuery& q, const TimeSeries& s) {
    ordered_json values = ordered_json::array();
    for (const auto& v : s.values) values.push_back(v ? ordered_json(*v) : ordered_json(nullptr));
    return {{"meter_id", meter_id},
            {"field", ingest::to_string(q.field)},
            {"from_ms", q.from_ms},
            {"to_ms", q.to_ms},
            {"step_ms", q.step_ms ? ordered_json(*q.step_ms) : ordered_json(nullptr)},
            {"agg", q.step_ms ? ordered_json(to_string(q.effective_aggregation())) : ordered_json(nullptr)},
            {"timestamps", s.timestamps},
            {"values", std::move(values)}};
}

ordered_json verify_json(const ledger::VerifyResult& v, std::size_t height) {
    return {{"ok", v.ok},
            {"first_bad_index", v.first_bad_index ? ordered_json(*v.first_bad_index) : ordered_json(nullptr)},
            {"reason", v.reason},
            {"height", height}};
}

} // namespace

struct HttpServer::Impl {
    explicit Impl(Service& s) : service(s) {
        // SO_REUSEADDR only: a second server on a busy port must fail to bind.
        http.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
        });
        routes();
    }

    Service& service;
    httplib::Server http;
    int port = -1;

    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    // Runs a handler, turning library exceptions into JSON errors.
    static httplib::Server::Handler guarded(Handler h) {
        return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
            try {
                h(req, res);
            } catch (const std::exception& e) {
                const auto s = status_for(e);
                send_error(res, s.status, s.kind, e.what());
            }
        };
    }

    void routes() {
        http.Post("/api/v1/readings", guarded([this](const auto& req, auto& res) { submit_reading(req, res); }));
        http.Get("/api/v1/meters/:id/latest", guarded([this](const auto& req, auto& res) { latest(req, res); }));
        http.Get("/api/v1/meters/:id/series", guarded([this](const auto& req, auto& res) { series(req, res); }));
        http.Post("/api/v1/meters/:id/relay", guarded([this](const auto& req, auto& res) { relay(req, res); }));
        http.Put("/api/v1/meters/:id/goal", guarded([this](const auto& req, auto& res) { put_goal(req, res); }));
        http.Get("/api/v1/meters/:id/goal/progress",
                 guarded([this](const auto& req, auto& res) { goal_progress(req, res); }));

        http.Get("/api/v1/chain/blocks", guarded([this](const auto&, auto& res) { blocks(res); }));
        http.Get("/api/v1/chain/blocks/:index", guarded([this](const auto& req, auto& res) { block(req, res); }));
        http.Get("/api/v1/chain/verify", guarded([this](const auto&, auto& res) {
                     send_json(res, verify_json(service.ledger().verify(), service.ledger().size()));
                 }));
        http.Get("/api/v1/accounts/:id", guarded([this](const auto& req, auto& res) { account(req, res); }));

        http.Get("/api/v1/invoices", guarded([this](const auto& req, auto& res) { invoices(req, res); }));
        http.Post("/api/v1/billing/run", guarded([this](const auto& req, auto& res) { run_billing(req, res); }));
        http.Post("/api/v1/invoices/:id/pay", guarded([this](const auto& req, auto& res) { pay(req, res); }));
        http.Get("/api/v1/peaks", guarded([this](const auto& req, auto& res) { peaks(req, res); }));

        http.Get("/api/v1/forecast/:meter", guarded([this](const auto& req, auto& res) { forecast(req, res); }));

        http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.body.empty()) {
                send_error(res, res.status, res.status == 404 ? "not_found" : "http", "no such route");
            }
        });
    }

    void submit_reading(const httplib::Request& req, httplib::Response& res) {
        const auto reading = metersim::reading_from_json(parse_body(req));
        const auto offset = service.store().submit_reading(reading);
        send_json(res, {{"offset", offset}});
    }

    void latest(const httplib::Request& req, httplib::Response& res) {
        const auto record = service.store().latest(req.path_params.at("id"));
        if (!record) {
            res.status = 204;
            return;
        }
        send_json(res, ingest::to_json(*record));
    }

    void series(const httplib::Request& req, httplib::Response& res) {
        const auto& id = req.path_params.at("id");
        ingest::SeriesQuery q;
        q.meter_id = id;
        if (const auto f = param(req, "field")) q.field = ingest::parse_field(*f);
        if (const auto a = param(req, "agg")) q.agg = parse_aggregation(*a);
        if (const auto s = param(req, "step")) q.step_ms = static_cast<std::int64_t>(parse_number(*s, "step"));
        const auto from = time_param(req, "from");
        const auto to = time_param(req, "to");
        const auto range = service.store().time_range(id);
        if ((!from || !to) && !range) {
            // Nothing stored yet and no explicit range: an empty answer.
            q.from_ms = from.value_or(0);
            q.to_ms = to.value_or(q.from_ms + 1);
            send_json(res, series_json(id, q, {}));
            return;
        }
        q.from_ms = from ? *from : range->first;
        q.to_ms = to ? *to : range->second + 1;
        send_json(res, series_json(id, q, service.store().query_series(q)));
    }

    void relay(const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req);
        if (!body.contains("on") || !body["on"].is_boolean()) throw ValidationError("body needs a boolean 'on'");
        auto* fleet = service.fleet();
        if (!fleet) {
            send_error(res, 503, "unavailable", "no simulator is attached to this server");
            return;
        }
        const auto& id = req.path_params.at("id");
        const bool on = fleet->set_relay(id, body["on"].get<bool>());
        send_json(res, {{"meter_id", id}, {"on", on}});
    }

    billing::Period goal_period(const nlohmann::json& source_start, const nlohmann::json& source_end) const {
        if (source_start.is_null() != source_end.is_null()) {
            throw ValidationError("give both period_start and period_end or neither");
        }
        if (source_start.is_null()) return billing::calendar_month(service.now());
        billing::Period p{time_from_json(source_start, "period_start"), time_from_json(source_end, "period_end")};
        p.validate();
        return p;
    }

    void put_goal(const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req);
        if (!body.contains("kwh_target") || !body["kwh_target"].is_number()) {
            throw ValidationError("body needs a numeric kwh_target");
        }
        const auto period = goal_period(body.value("period_start", nlohmann::json()),
                                        body.value("period_end", nlohmann::json()));
        const auto& id = req.path_params.at("id");
        service.store().register_meter(id);
        send_json(res, billing::to_json(service.billing().set_goal(id, period, body["kwh_target"].get<double>())));
    }

    void goal_progress(const httplib::Request& req, httplib::Response& res) {
        const auto& id = req.path_params.at("id");
        const auto now = time_param(req, "now").value_or(service.now());
        billing::Period period;
        const auto start = param(req, "period_start");
        const auto end = param(req, "period_end");
        if (start || end) {
            period = goal_period(start ? nlohmann::json(*start) : nlohmann::json(),
                                 end ? nlohmann::json(*end) : nlohmann::json());
        } else if (const auto goal = service.billing().active_goal(id, now)) {
            period = goal->period;
        } else {
            throw NotFoundError("no goal covers the current time for meter " + id);
        }
        const auto projection = param(req, "projection").value_or("linear");
        std::optional<billing::Projector> projector;
        if (projection == "forecast") {
            projector = forecast_projector(service.store());
        } else if (projection != "linear") {
            throw ValidationError("projection must be linear or forecast");
        }
        const auto progress = service.billing().goal_progress(id, period, now, projector ? &*projector : nullptr);
        send_json(res, billing::to_json(progress));
    }

    void blocks(httplib::Response& res) {
        ordered_json list = ordered_json::array();
        for (const auto& b : service.ledger().blocks()) list.push_back(ledger::to_json(b));
        send_json(res, {{"height", list.size()}, {"blocks", std::move(list)}});
    }

    void block(const httplib::Request& req, httplib::Response& res) {
        const auto& text = req.path_params.at("index");
        std::uint64_t index = 0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), index);
        if (ec != std::errc() || ptr != text.data() + text.size()) {
            throw ValidationError("block index must be a non-negative integer");
        }
        const auto b = service.ledger().block(index);
        if (!b) throw NotFoundError("no block " + text);
        send_json(res, ledger::to_json(*b));
    }

    void account(const httplib::Request& req, httplib::Response& res) {
        const auto& id = req.path_params.at("id");
        if (!service.ledger().has_account(id)) throw NotFoundError("unknown account " + id);
        send_json(res, {{"account", id}, {"balance_paise", service.ledger().balance(id)}});
    }

    void invoices(const httplib::Request& req, httplib::Response& res) {
        std::optional<billing::Period> period;
        if (const auto p = param(req, "period")) period = parse_period(*p);
        ordered_json list = ordered_json::array();
        for (const auto& inv : service.billing().invoices(param(req, "meter"), period)) {
            list.push_back(billing::to_json(inv));
        }
        send_json(res, {{"invoices", std::move(list)}});
    }

    void run_billing(const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req);
        for (const char* key : {"period_start", "period_end", "tariff"}) {
            if (!body.contains(key)) throw ValidationError(std::string("body needs ") + key);
        }
        if (!body["tariff"].is_string()) throw ValidationError("tariff must be a name");
        const billing::Period period{time_from_json(body["period_start"], "period_start"),
                                     time_from_json(body["period_end"], "period_end")};
        const auto& tariff = service.tariffs().get(body["tariff"].get<std::string>());
        const auto run = service.billing().run_billing_cycle(period, tariff, service.now());
        ordered_json list = ordered_json::array();
        for (const auto& inv : run.invoices) list.push_back(billing::to_json(inv));
        send_json(res, {{"invoices", std::move(list)},
                        {"block", run.block ? ledger::to_json(*run.block) : ordered_json(nullptr)}});
    }

    void pay(const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req);
        const auto& id = req.path_params.at("id");
        std::string payer;
        if (body.contains("payer")) {
            if (!body["payer"].is_string()) throw ValidationError("payer must be an account name");
            payer = body["payer"].get<std::string>();
        } else {
            payer = service.billing().invoice(id).account;
        }
        send_json(res, billing::to_json(service.billing().pay_invoice(id, payer, service.now())));
    }

    void peaks(const httplib::Request& req, httplib::Response& res) {
        const auto t = param(req, "threshold");
        if (!t) throw ValidationError("threshold is required");
        const double threshold = parse_number(*t, "threshold");
        const auto step = static_cast<std::int64_t>(parse_number(param(req, "step").value_or("60000"), "step"));
        if (step <= 0) throw ValidationError("step must be positive");
        auto from = time_param(req, "from");
        auto to = time_param(req, "to");
        std::int64_t lo = INT64_MAX;
        std::int64_t hi = INT64_MIN;
        for (const auto& id : service.store().meter_ids()) {
            if (const auto r = service.store().time_range(id)) {
                lo = std::min(lo, r->first);
                hi = std::max(hi, r->second);
            }
        }
        std::vector<billing::PeakEvent> events;
        if (!from) from = lo;
        if (!to) to = hi == INT64_MIN ? hi : hi + 1;
        if (lo <= hi && *from < *to) {
            events = billing::detect_peaks(billing::aggregate_demand(service.store(), *from, *to, step), threshold);
        } else if (!(threshold > 0.0)) {
            throw DomainError("peak threshold must be > 0");
        }
        ordered_json list = ordered_json::array();
        for (const auto& e : events) list.push_back(billing::to_json(e));
        send_json(res, {{"threshold_va", threshold}, {"step_ms", step}, {"events", std::move(list)}});
    }

    void forecast(const httplib::Request& req, httplib::Response& res) {
        const auto& id = req.path_params.at("meter");
        const double hours = parse_number(param(req, "horizon_hours").value_or("24"), "horizon_hours");
        if (hours < 0) throw ValidationError("horizon_hours must not be negative");
        MeterForecastOptions options;
        if (const auto s = param(req, "step_ms")) options.step_ms = static_cast<std::int64_t>(parse_number(*s, "step_ms"));
        if (const auto f = param(req, "field")) options.field = ingest::parse_field(*f);
        const auto horizon = static_cast<std::int64_t>(std::llround(hours * static_cast<double>(kMillisPerHour)));
        const auto fc = forecast_meter(service.store(), id, horizon, options);
        ordered_json rows = ordered_json::array();
        for (const auto& row : fc.rows) rows.push_back(forecast::to_json(row));
        send_json(res, {{"meter_id", id},
                        {"step_ms", options.step_ms},
                        {"in_sample_rmse", fc.fit.in_sample_rmse},
                        {"rows", std::move(rows)}});
    }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        impl_->port = impl_->http.bind_to_any_port(host);
    } else {
        impl_->port = impl_->http.bind_to_port(host, port) ? port : -1;
    }
    if (impl_->port < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return impl_->port;
}

void HttpServer::listen() { impl_->http.listen_after_bind(); }

void HttpServer::start() {
    thread_ = std::thread([this] { listen(); });
    impl_->http.wait_until_ready();
}

void HttpServer::stop() {
    impl_->http.stop();
    if (thread_.joinable()) thread_.join();
}

} // namespace watt::api
