#include <doctest.h>

#include "watt/api/server.hpp"
#include "watt/common/errors.hpp"
#include "watt/common/time_format.hpp"
#include "watt/ledger/hash.hpp"

#include <httplib.h>
#include <json.hpp>

#include <filesystem>
#include <random>
#include <thread>

using namespace watt;
using nlohmann::json;

namespace {

constexpr std::int64_t kNow = 1'710'000'000'000; // 2024-03-09

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        std::random_device rd;
        path = std::filesystem::temp_directory_path() / ("watt_api_" + std::to_string(rd()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

api::ServiceConfig config_at(std::int64_t now, std::optional<std::filesystem::path> dir = std::nullopt) {
    api::ServiceConfig c;
    c.data_dir = std::move(dir);
    c.clock = [now] { return now; };
    c.ledger.opening_balances = {{"m1", 10'000'000}, {"m2", 10'000'000}, {"poor", 0}};
    return c;
}

// A service plus a server on a random local port and a client for it.
struct Harness {
    explicit Harness(api::ServiceConfig config = config_at(kNow))
        : service(std::move(config)), server(service) {
        port = server.bind("127.0.0.1", 0);
        server.start();
        client = std::make_unique<httplib::Client>("127.0.0.1", port);
    }

    json get(const std::string& path, int expect = 200) {
        auto res = client->Get(path);
        REQUIRE(res);
        CHECK_MESSAGE(res->status == expect, path << " -> " << res->status << " " << res->body);
        return res->body.empty() ? json() : json::parse(res->body);
    }

    json send(const std::string& method, const std::string& path, const json& body, int expect = 200) {
        const auto text = body.dump();
        auto res = method == "PUT" ? client->Put(path, text, "application/json")
                                   : client->Post(path, text, "application/json");
        REQUIRE(res);
        CHECK_MESSAGE(res->status == expect, path << " -> " << res->status << " " << res->body);
        return res->body.empty() ? json() : json::parse(res->body);
    }

    api::Service service;
    api::HttpServer server;
    int port = 0;
    std::unique_ptr<httplib::Client> client;
};

json reading_json(const std::string& meter, std::int64_t t, double kwh, double amps = 1.0) {
    return json{{"meter_id", meter}, {"timestamp_ms", t}, {"v_rms", 230.0},
                {"i_rms", amps},     {"apparent_power", 230.0 * amps}, {"kwh_total", kwh}};
}

} // namespace

TEST_CASE("error kinds map onto statuses") {
    CHECK(api::status_for(ValidationError("x")).status == 400);
    CHECK(api::status_for(DomainError("x")).status == 400);
    CHECK(api::status_for(NotFoundError("x")).status == 404);
    CHECK(api::status_for(OrderingError("x")).status == 409);
    CHECK(api::status_for(ConflictError("x")).status == 409);
    CHECK(api::status_for(PreconditionError("x")).status == 412);
    CHECK(api::status_for(InsufficientBalanceError("x")).status == 422);
    CHECK(api::status_for(std::runtime_error("x")).status == 500);
}

TEST_CASE("fresh store verifies and unknown routes are json 404s") {
    Harness h;
    const auto v = h.get("/api/v1/chain/verify");
    CHECK(v["ok"] == true);
    CHECK(v["first_bad_index"].is_null());
    CHECK(v["height"] == 1);
    CHECK(h.get("/api/v1/chain/blocks")["blocks"].size() == 1);
    CHECK(h.get("/api/v1/nowhere", 404)["error"] == "not_found");
}

TEST_CASE("readings round trip through submit and latest") {
    Harness h;
    const auto r = reading_json("m1", 1000, 0.0);
    CHECK(h.send("POST", "/api/v1/readings", r)["offset"] == 0);
    CHECK(h.send("POST", "/api/v1/readings", reading_json("m1", 2000, 0.5))["offset"] == 1);
    auto latest = h.get("/api/v1/meters/m1/latest");
    CHECK(latest["store_offset"] == 1);
    latest.erase("store_offset");
    CHECK(latest == reading_json("m1", 2000, 0.5));

    CHECK(h.get("/api/v1/meters/ghost/latest", 404)["error"] == "not_found");
    h.service.store().register_meter("quiet");
    auto res = h.client->Get("/api/v1/meters/quiet/latest");
    REQUIRE(res);
    CHECK(res->status == 204);

    CHECK(h.send("POST", "/api/v1/readings", reading_json("m1", 3000, 0.5, 150.0), 400)["error"] == "validation");
    CHECK(h.send("POST", "/api/v1/readings", reading_json("m1", 1500, 0.6), 409)["error"] == "ordering");
    CHECK(h.get("/api/v1/meters/m1/latest")["timestamp_ms"] == 2000);

    auto bad = h.client->Post("/api/v1/readings", "{not json", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);
}

TEST_CASE("series endpoint buckets and marks gaps") {
    Harness h;
    h.send("POST", "/api/v1/readings", reading_json("m1", 0, 0.0, 10.0 / 230.0));
    h.send("POST", "/api/v1/readings", reading_json("m1", 500, 0.0, 20.0 / 230.0));
    h.send("POST", "/api/v1/readings", reading_json("m1", 2500, 0.0, 40.0 / 230.0));
    const auto s = h.get("/api/v1/meters/m1/series?from=0&to=3000&step=1000&agg=mean");
    CHECK(s["timestamps"] == json({0, 1000, 2000}));
    CHECK(s["values"][0].get<double>() == doctest::Approx(15.0).epsilon(1e-12));
    CHECK(s["values"][1].is_null());
    CHECK(s["values"][2].get<double>() == doctest::Approx(40.0).epsilon(1e-12));

    const auto raw = h.get("/api/v1/meters/m1/series");
    CHECK(raw["timestamps"].size() == 3);
    CHECK(h.get("/api/v1/meters/m1/series?from=10&to=20")["timestamps"].empty());
    CHECK(h.get("/api/v1/meters/m1/series?from=20&to=10", 400)["error"] == "validation");
    CHECK(h.get("/api/v1/meters/m1/series?field=volume", 400)["error"] == "validation");
    h.get("/api/v1/meters/ghost/series?from=0&to=10", 404);
}

TEST_CASE("relay commands reach an attached fleet") {
    Harness h;
    CHECK(h.send("POST", "/api/v1/meters/m1/relay", json{{"on", false}}, 503)["error"] == "unavailable");

    metersim::ApplianceProfile heater;
    heater.name = "heater";
    heater.rated_power = 1000.0;
    metersim::Fleet fleet(7, {{"m1", heater, true}});
    h.service.attach_fleet(&fleet);
    CHECK(fleet.step(0)[0].i_rms > 0.0);
    CHECK(h.send("POST", "/api/v1/meters/m1/relay", json{{"on", false}})["on"] == false);
    CHECK(fleet.step(60'000)[0].i_rms == 0.0);
    h.send("POST", "/api/v1/meters/m1/relay", json{{"on", false}});
    CHECK_FALSE(fleet.relay("m1"));
    h.send("POST", "/api/v1/meters/m9/relay", json{{"on", true}}, 404);
    h.send("POST", "/api/v1/meters/m1/relay", json{{"on", "yes"}}, 400);
    h.service.attach_fleet(nullptr);
}

TEST_CASE("billing, payment and chain endpoints agree") {
    Harness h;
    for (int k = 0; k <= 10; ++k) {
        h.send("POST", "/api/v1/readings", reading_json("m1", k * kMillisPerHour, k * 10.0));
        h.send("POST", "/api/v1/readings", reading_json("m2", k * kMillisPerHour, k * 5.0));
    }
    const json run_body{{"period_start", 0}, {"period_end", 10 * kMillisPerHour}, {"tariff", "state"}};
    const auto run = h.send("POST", "/api/v1/billing/run", run_body);
    REQUIRE(run["invoices"].size() == 2);
    CHECK(run["invoices"][0]["total_paise"] == 60900);
    CHECK(run["invoices"][1]["total_paise"] == 30450);
    CHECK(run["block"]["index"] == 1);
    CHECK(run["block"]["transactions"].size() == 2);

    const auto again = h.send("POST", "/api/v1/billing/run", run_body);
    CHECK(again["block"].is_null());
    CHECK(again["invoices"] == run["invoices"]);

    h.send("POST", "/api/v1/billing/run",
           json{{"period_start", 0}, {"period_end", kNow + 1}, {"tariff", "state"}}, 412);
    h.send("POST", "/api/v1/billing/run",
           json{{"period_start", 0}, {"period_end", 1000}, {"tariff", "ev"}}, 404);
    h.send("POST", "/api/v1/billing/run", json{{"period_start", 0}}, 400);

    const std::string id = run["invoices"][0]["invoice_id"];
    const auto listed = h.get("/api/v1/invoices?meter=m1&period=0," + std::to_string(10 * kMillisPerHour));
    REQUIRE(listed["invoices"].size() == 1);
    CHECK(listed["invoices"][0]["invoice_id"] == id);
    CHECK(h.get("/api/v1/invoices?period=1970-01-01T00:00:00Z,1970-01-01T10:00:00Z")["invoices"].size() == 2);
    h.get("/api/v1/invoices?period=5", 400);

    const auto receipt = h.send("POST", "/api/v1/invoices/" + id + "/pay", json{{"payer", "m1"}});
    CHECK(receipt["amount_paise"] == 60900);
    const auto block = h.get("/api/v1/chain/blocks/" + std::to_string(receipt["block_index"].get<int>()));
    CHECK(block["hash"] == receipt["block_hash"]);
    REQUIRE(block["transactions"].size() == 1);
    CHECK(block["transactions"][0]["tx_id"] == receipt["tx_id"]);
    CHECK(block["transactions"][0]["gas"] == receipt["gas"]);
    CHECK(h.get("/api/v1/chain/blocks")["blocks"].back() == block);

    CHECK(h.get("/api/v1/accounts/m1")["balance_paise"] == 10'000'000 - 60900);
    CHECK(h.get("/api/v1/accounts/utility")["balance_paise"] == 60900);
    h.get("/api/v1/accounts/nobody", 404);

    CHECK(h.send("POST", "/api/v1/invoices/" + id + "/pay", json{{"payer", "m1"}}, 409)["error"] == "conflict");
    const std::string id2 = run["invoices"][1]["invoice_id"];
    CHECK(h.send("POST", "/api/v1/invoices/" + id2 + "/pay", json{{"payer", "poor"}}, 422)["error"] ==
          "insufficient_balance");
    CHECK(h.get("/api/v1/invoices?meter=m2")["invoices"][0]["status"] == "issued");
    h.send("POST", "/api/v1/invoices/inv-none/pay", json{{"payer", "m1"}}, 404);
    h.get("/api/v1/chain/blocks/99", 404);
    h.get("/api/v1/chain/blocks/x", 400);

    // The payer defaults to the invoice's account.
    CHECK(h.send("POST", "/api/v1/invoices/" + id2 + "/pay", json::object())["amount_paise"] == 30450);
    CHECK(h.get("/api/v1/chain/verify")["ok"] == true);
}

TEST_CASE("goals and progress") {
    const auto march = parse_iso8601("2024-03-01");
    Harness h;
    h.send("PUT", "/api/v1/meters/m1/goal", json{{"kwh_target", -1}}, 400);
    h.get("/api/v1/meters/m1/goal/progress", 404);

    const auto goal = h.send("PUT", "/api/v1/meters/m1/goal", json{{"kwh_target", 100}});
    CHECK(goal["period_start_ms"] == march);
    CHECK(goal["period_end_ms"] == parse_iso8601("2024-04-01"));

    h.service.store().submit_reading({"m1", march, 230.0, 1.0, 230.0, 10.0});
    h.service.store().submit_reading({"m1", kNow - 1000, 230.0, 1.0, 230.0, 60.0});
    const auto p = h.get("/api/v1/meters/m1/goal/progress");
    CHECK(p["kwh_used"].get<double>() == doctest::Approx(50.0));
    CHECK(p["fraction_of_target"].get<double>() == doctest::Approx(0.5));
    CHECK(p["projection"] == "linear");
    CHECK(p["projected_overshoot"] == true);

    const auto explicit_period = h.send(
        "PUT", "/api/v1/meters/m1/goal",
        json{{"kwh_target", 500}, {"period_start", "2024-03-01"}, {"period_end", "2024-03-31"}});
    CHECK(explicit_period["kwh_target"] == 500);
    const auto q = h.get("/api/v1/meters/m1/goal/progress?period_start=2024-03-01&period_end=2024-03-31");
    CHECK(q["kwh_target"] == 500);
    CHECK(q["projected_overshoot"] == false);
    h.get("/api/v1/meters/m1/goal/progress?projection=magic", 400);
}

TEST_CASE("forecast projection for goals uses predicted power") {
    const auto start = parse_iso8601("2024-03-01");
    const auto now = start + 10 * kMillisPerDay;
    Harness h(config_at(now));
    // Constant 1150 VA: 27.6 kWh a day.
    for (std::int64_t t = start, k = 0; t < now; t += kMillisPerHour, ++k) {
        h.service.store().submit_reading({"m1", t, 230.0, 5.0, 1150.0, k * 1.15});
    }
    h.send("PUT", "/api/v1/meters/m1/goal", json{{"kwh_target", 1000}});
    const auto p = h.get("/api/v1/meters/m1/goal/progress?projection=forecast");
    CHECK(p["projection"] == "forecast");
    // 31 days at 27.6 kWh a day, less the final hour's step not yet recorded.
    CHECK(p["projected_kwh"].get<double>() == doctest::Approx(31 * 27.6 - 1.15).epsilon(0.01));
    CHECK(p["projected_overshoot"] == false);
}

TEST_CASE("peaks endpoint") {
    Harness h;
    h.get("/api/v1/peaks", 400);
    h.get("/api/v1/peaks?threshold=0", 400);
    CHECK(h.get("/api/v1/peaks?threshold=100")["events"].empty());
    h.send("POST", "/api/v1/readings", reading_json("a", 0, 0.0, 1.0));
    h.send("POST", "/api/v1/readings", reading_json("b", 10, 0.0, 1.0));
    h.send("POST", "/api/v1/readings", reading_json("a", 60'000, 0.0, 0.1));
    const auto peaks = h.get("/api/v1/peaks?threshold=300&step=60000");
    REQUIRE(peaks["events"].size() == 1);
    CHECK(peaks["events"][0]["timestamp_ms"] == 0);
    CHECK(peaks["events"][0]["aggregate_power_va"].get<double>() == doctest::Approx(460.0));
    CHECK(h.get("/api/v1/peaks?threshold=460")["events"].empty());
}

TEST_CASE("forecast endpoint") {
    Harness h;
    h.get("/api/v1/forecast/m1", 404);
    for (int k = 0; k < 72; ++k) {
        const double amps = 1.0 + 0.5 * std::sin(2 * 3.141592653589793 * k / 24.0);
        h.service.store().submit_reading({"m1", k * kMillisPerHour, 230.0, amps, 230.0 * amps, 0.0});
    }
    const auto fc = h.get("/api/v1/forecast/m1?horizon_hours=6&step_ms=3600000");
    REQUIRE(fc["rows"].size() == 6);
    const auto& first = fc["rows"][0];
    CHECK(first["ds"] == format_iso8601(72 * kMillisPerHour));
    const double parts = first["trend"].get<double>() + first["seasonal"].get<double>() +
                         first["holiday"].get<double>() + first["regressor"].get<double>();
    CHECK(first["yhat"].get<double>() == doctest::Approx(parts).epsilon(1e-9));
    CHECK(h.get("/api/v1/forecast/m1?horizon_hours=0")["rows"].empty());
    h.get("/api/v1/forecast/m1?horizon_hours=-1", 400);
    h.service.store().register_meter("quiet");
    CHECK(h.get("/api/v1/forecast/quiet", 412)["error"] == "precondition");
}

TEST_CASE("restart keeps data queryable") {
    TempDir dir;
    {
        Harness h(config_at(kNow, dir.path));
        h.send("POST", "/api/v1/readings", reading_json("m1", 0, 0.0));
        h.send("POST", "/api/v1/readings", reading_json("m1", kMillisPerHour, 100.0));
        h.send("POST", "/api/v1/billing/run",
               json{{"period_start", 0}, {"period_end", kMillisPerHour + 1}, {"tariff", "state"}});
        h.send("PUT", "/api/v1/meters/m1/goal", json{{"kwh_target", 10}});
    }
    Harness h(config_at(kNow, dir.path));
    CHECK(h.get("/api/v1/meters/m1/latest")["kwh_total"] == 100.0);
    CHECK(h.get("/api/v1/invoices")["invoices"][0]["total_paise"] == 60900);
    CHECK(h.get("/api/v1/chain/verify")["height"] == 2);
    CHECK(h.get("/api/v1/meters/m1/goal/progress")["kwh_target"] == 10);
    CHECK(h.send("POST", "/api/v1/readings", reading_json("m1", 2 * kMillisPerHour, 101.0))["offset"] == 2);
}

TEST_CASE("concurrent submissions from many clients") {
    Harness h;
    constexpr int kMeters = 4;
    constexpr int kPerMeter = 50;
    std::vector<std::thread> workers;
    std::atomic<int> failures{0};
    for (int m = 0; m < kMeters; ++m) {
        workers.emplace_back([&, m] {
            httplib::Client c("127.0.0.1", h.port);
            const auto meter = "c" + std::to_string(m);
            for (int k = 0; k < kPerMeter; ++k) {
                auto res = c.Post("/api/v1/readings", reading_json(meter, k, k * 0.001).dump(), "application/json");
                if (!res || res->status != 200 || json::parse(res->body)["offset"] != k) ++failures;
            }
        });
    }
    for (auto& w : workers) w.join();
    CHECK(failures == 0);
    for (int m = 0; m < kMeters; ++m) {
        CHECK(h.service.store().reading_count("c" + std::to_string(m)) == kPerMeter);
    }
}
