// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any fails.

#include "../support/block_mutation.hpp"
#include "../support/forecast_fixtures.hpp"
#include "../support/ledger_fixtures.hpp"
#include "../support/pipeline_reference.hpp"
#include "watt/billing/invoice.hpp"
#include "watt/billing/tariff.hpp"
#include "watt/cli/app.hpp"
#include "watt/common/io.hpp"
#include "watt/common/time_format.hpp"
#include "watt/forecast/pipeline.hpp"
#include "watt/ledger/chain.hpp"
#include "watt/metersim/energy.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

using namespace watt;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kEnergyTolerance = 1e-9;
constexpr double kEnergyBudgetS = 1.0;
constexpr int kMutations = 1000;
constexpr double kMutationBudgetS = 5.0;
constexpr const char* kGoldenBlockHash = "ecd33f50e646a033fd24246a29f2f0ef1726f18123ecfbf964d1d9500d1bdbcf";
constexpr double kForecastRmseMax = 0.10;
constexpr double kSeasonalCorrelationMin = 0.95;
constexpr double kForecastBudgetS = 30.0;
constexpr double kGradientTolerance = 1e-5;
constexpr int kGradientPoints = 20;
constexpr int kPipelineCases = 1000;
constexpr double kEndToEndRelTolerance = 1e-3;

struct Verdict {
    bool pass = false;
    std::string detail;
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("watt_accept_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult watt_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "watt");
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

void expect_ok(const CliResult& r, const std::string& what) {
    if (r.code != 0) throw std::runtime_error(what + " exited " + std::to_string(r.code) + ": " + r.err);
}

// ---- criteria ----

Verdict energy_unit_check() {
    Stopwatch clock;
    std::mt19937_64 gen(1);
    constexpr std::int64_t hour = 3'600'000;
    double worst = 0.0;
    std::vector<std::vector<std::int64_t>> partitions = {{hour}, {1000 * 60, hour}};
    for (int k : {2, 3, 7, 60, 3600, 360000}) {
        std::vector<std::int64_t> cuts;
        for (int i = 1; i <= k; ++i) cuts.push_back(hour * i / k);
        partitions.push_back(cuts);
    }
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::int64_t> cuts;
        const auto n = std::uniform_int_distribution<int>(1, 500)(gen);
        for (int i = 0; i < n; ++i) cuts.push_back(std::uniform_int_distribution<std::int64_t>(0, hour)(gen));
        cuts.push_back(hour);
        std::sort(cuts.begin(), cuts.end());
        partitions.push_back(cuts);
    }
    for (const auto& cuts : partitions) {
        auto acc = metersim::accumulate_energy({}, 1000.0, 0);
        for (const auto t : cuts) acc = metersim::accumulate_energy(acc, 1000.0, t);
        worst = std::max(worst, std::abs(acc.kwh - 1.0));
    }
    const double elapsed = clock.seconds();
    return {worst <= kEnergyTolerance && elapsed < kEnergyBudgetS,
            std::to_string(partitions.size()) + " partitions, max |kwh - 1| = " + fmt(worst) + ", " + fmt(elapsed) +
                " s"};
}

Verdict cost_table_pricing() {
    struct Expected {
        const char* name;
        billing::Tariff tariff;
        std::vector<std::int64_t> lines;
        std::int64_t total;
    };
    const Expected cases[] = {
        {"state", billing::state_tariff(), {47000, 5100, 4100, 2100, 2600}, 60900},
        {"private", billing::private_tariff(), {51700, 4900, 5700, 3000, 4700}, 69900},
    };
    bool pass = true;
    std::string detail;
    for (const auto& c : cases) {
        const auto inv = billing::compute_invoice(100.0, c.tariff, "meter", {0, 1});
        std::vector<std::int64_t> lines;
        for (const auto& l : inv.lines) lines.push_back(l.amount_paise);
        std::string got;
        for (const auto v : lines) got += (got.empty() ? "" : "/") + std::to_string(v);
        const bool ok = lines == c.lines && inv.total_paise == c.total;
        pass = pass && ok;
        detail += std::string(detail.empty() ? "" : "; ") + c.name + " " + got + " total " +
                  std::to_string(inv.total_paise) + " (expected " + std::to_string(c.total) + ")";
    }
    return {pass, detail};
}

Verdict immutability() {
    Stopwatch clock;
    ledger::Chain chain(1000, {{"alice", 10'000'000}, {"bob", 10'000'000}});
    for (int i = 1; i < 10; ++i) {
        std::vector<ledger::Transaction> txs;
        for (int j = 0; j < 1 + i % 3; ++j) {
            txs.push_back(ledger::make_transaction(j % 2 ? "alice" : "bob", "utility", 100 * i + j,
                                                   "invoice-" + std::to_string(i) + "-" + std::to_string(j),
                                                   1000 + 10 * i + j));
        }
        chain.add_block(std::move(txs), 1000 + 10 * i + 9);
    }
    const auto pristine = chain.blocks();
    if (pristine.size() != 10 || !ledger::verify_chain(pristine).ok) return {false, "fixture chain is not valid"};
    std::mt19937_64 gen(99);
    int detected = 0;
    for (int trial = 0; trial < kMutations; ++trial) {
        auto blocks = pristine;
        const auto which = std::uniform_int_distribution<std::size_t>(0, blocks.size() - 1)(gen);
        const auto pos =
            std::uniform_int_distribution<std::size_t>(0, testing::block_byte_count(blocks[which]) - 1)(gen);
        const auto mask = static_cast<std::uint8_t>(std::uniform_int_distribution<int>(1, 255)(gen));
        testing::mutate_block_byte(blocks[which], pos, mask);
        const auto r = ledger::verify_chain(blocks);
        if (!r.ok && r.first_bad_index == which) ++detected;
    }
    const double elapsed = clock.seconds();
    return {detected == kMutations && elapsed < kMutationBudgetS,
            std::to_string(detected) + "/" + std::to_string(kMutations) + " detected at the mutated index, " +
                fmt(elapsed) + " s"};
}

Verdict golden_hash() {
    const auto hash = ledger::to_hex(testing::fixture_block().hash);
    return {hash == kGoldenBlockHash, hash};
}

Verdict forecast_recovery() {
    Stopwatch clock;
    const std::int64_t start = 1704067200000;
    const auto synth = testing::synthetic_hourly(90, 0.05, 20240101, start);
    const std::size_t holdout = 7 * 24;
    const std::size_t n_train = synth.series.size() - holdout;
    TimeSeries train;
    for (std::size_t i = 0; i < n_train; ++i) train.push_back(synth.series.timestamps[i], synth.series.values[i]);

    forecast::ModelConfig cfg;
    cfg.trend = forecast::TrendType::linear;
    cfg.seasonalities = {{"daily", 1.0, 4}};
    const auto fitted = forecast::fit(cfg, train);
    const std::vector<std::int64_t> times(synth.series.timestamps.begin() + static_cast<std::ptrdiff_t>(n_train),
                                          synth.series.timestamps.end());
    const auto rows = forecast::predict(fitted.model, times);

    double sq = 0.0;
    std::vector<double> est;
    std::vector<double> truth;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double err = rows[i].yhat - *synth.series.values[n_train + i];
        sq += err * err;
        est.push_back(rows[i].seasonal);
        truth.push_back(synth.seasonal_truth[n_train + i]);
    }
    const double rmse = std::sqrt(sq / static_cast<double>(rows.size()));

    auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
    const double me = mean(est);
    const double mt = mean(truth);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) {
        sxy += (est[i] - me) * (truth[i] - mt);
        sxx += (est[i] - me) * (est[i] - me);
        syy += (truth[i] - mt) * (truth[i] - mt);
    }
    const double corr = sxy / std::sqrt(sxx * syy);
    const double elapsed = clock.seconds();
    return {rmse <= kForecastRmseMax && corr >= kSeasonalCorrelationMin && elapsed < kForecastBudgetS,
            "holdout rmse " + fmt(rmse) + ", seasonal correlation " + fmt(corr) + ", " + fmt(elapsed) + " s"};
}

Verdict logistic_gradient() {
    std::mt19937_64 gen(8);
    double worst = 0.0;
    for (int i = 0; i < kGradientPoints; ++i) {
        worst = std::max(worst, testing::logistic_gradient_error(testing::random_logistic_case(gen)));
    }
    return {worst <= kGradientTolerance,
            std::to_string(kGradientPoints) + " points, max relative error " + fmt(worst)};
}

Verdict pipeline_oracles() {
    std::mt19937_64 gen(31337);
    int impute_cases = 0, impute_bad = 0;
    int outlier_cases = 0, outlier_bad = 0;
    int resample_cases = 0, resample_bad = 0;
    auto close = [](const std::optional<double>& a, const std::optional<double>& b) {
        if (a.has_value() != b.has_value()) return false;
        return !a || std::abs(*a - *b) <= 1e-12 * std::max(1.0, std::abs(*b));
    };
    while (impute_cases < kPipelineCases || outlier_cases < kPipelineCases || resample_cases < kPipelineCases) {
        const auto ints = testing::random_int_series(gen, 1, 0.3);
        const auto s = ints.as_series();
        if (s.defined_count() > 0) {
            const std::pair<forecast::ImputeMethod, testing::RefImpute> methods[] = {
                {forecast::ImputeMethod::forward_fill, testing::RefImpute::forward},
                {forecast::ImputeMethod::backward_fill, testing::RefImpute::backward},
                {forecast::ImputeMethod::linear_interpolation, testing::RefImpute::linear}};
            for (const auto& [method, ref] : methods) {
                const auto got = forecast::impute(s, method);
                const auto want = testing::reference_impute(s, ref);
                bool ok = got.size() == want.size();
                for (std::size_t i = 0; ok && i < want.size(); ++i) ok = close(got.values[i], want[i]);
                ++impute_cases;
                if (!ok) ++impute_bad;
            }
        }
        if (s.defined_count() >= 2) {
            const auto numerator = std::uniform_int_distribution<std::int64_t>(1 << 19, 3 << 20)(gen) | 1;
            const double theta = static_cast<double>(numerator) / (1 << 20);
            ++outlier_cases;
            if (forecast::detect_outliers(s, forecast::OutlierMethod::zscore, theta) !=
                testing::reference_zscore(ints, numerator)) {
                ++outlier_bad;
            }
        }
        if (s.defined_count() >= 4) {
            const auto halves = std::uniform_int_distribution<std::int64_t>(1, 6)(gen);
            ++outlier_cases;
            if (forecast::detect_outliers(s, forecast::OutlierMethod::iqr, halves / 2.0) !=
                testing::reference_iqr(ints, halves)) {
                ++outlier_bad;
            }
        }
        const auto step = std::uniform_int_distribution<std::int64_t>(1, 20000)(gen);
        const auto got = forecast::resample(s, step, Aggregation::mean);
        const auto want = testing::reference_resample_mean(s, step);
        bool ok = got.size() == want.size();
        for (std::size_t i = 0; ok && i < want.size(); ++i) {
            ok = got.timestamps[i] == want[i].first && close(got.values[i], want[i].second);
        }
        ++resample_cases;
        if (!ok) ++resample_bad;
    }
    return {impute_bad == 0 && outlier_bad == 0 && resample_bad == 0,
            "impute " + std::to_string(impute_cases - impute_bad) + "/" + std::to_string(impute_cases) +
                ", outliers " + std::to_string(outlier_cases - outlier_bad) + "/" + std::to_string(outlier_cases) +
                ", resample " + std::to_string(resample_cases - resample_bad) + "/" + std::to_string(resample_cases)};
}

const std::string kScenario = std::string(WATT_TEST_FIXTURES) + "/three_meters.json";
const std::string kPeriod = "2024-03-01,2024-03-31";

// Simulates the scenario into a fresh store and runs one billing cycle.
nlohmann::json simulate_and_bill(const fs::path& dir) {
    expect_ok(watt_cli({"simulate", kScenario, "--data-dir", dir.string(), "--config", kScenario}), "simulate");
    const auto bill = watt_cli({"bill", "--data-dir", dir.string(), "--config", kScenario, "--period", kPeriod,
                                "--now", "2024-04-01", "--format", "json"});
    expect_ok(bill, "bill");
    return nlohmann::json::parse(bill.out);
}

void pay_all(const fs::path& dir, const nlohmann::json& run) {
    int day = 2;
    for (const auto& inv : run["invoices"]) {
        expect_ok(watt_cli({"bill", "--data-dir", dir.string(), "--config", kScenario, "--pay",
                            inv["invoice_id"].get<std::string>(), "--now", "2024-04-0" + std::to_string(day++)}),
                  "pay");
    }
}

Verdict end_to_end() {
    TempDir tmp;
    const auto run = simulate_and_bill(tmp.path);
    const auto& invoices = run["invoices"];
    std::string detail = std::to_string(invoices.size()) + " invoices in " +
                         (run["block"].is_null() ? std::string("no block")
                                                 : "block " + std::to_string(run["block"]["index"].get<int>()));
    bool pass = invoices.size() == 3 && !run["block"].is_null() && run["block"]["index"] == 1 &&
                run["block"]["transactions"].size() == 3;

    const auto start = parse_iso8601("2024-03-01");
    const auto end = parse_iso8601("2024-03-31");
    double worst = 0.0;
    for (const auto& inv : invoices) {
        const auto meter = inv["meter_id"].get<std::string>();
        const auto trace = watt_cli({"export", "readings", "--data-dir", tmp.path.string(), "--meter", meter,
                                     "--format", "json"});
        expect_ok(trace, "export");
        // Trapezoidal integration of the stored power trace over the period.
        double kwh = 0.0;
        std::optional<std::pair<std::int64_t, double>> prev;
        std::istringstream lines(trace.out);
        for (std::string line; std::getline(lines, line);) {
            const auto r = nlohmann::json::parse(line);
            const auto t = r["timestamp_ms"].get<std::int64_t>();
            if (t < start || t > end) continue;
            const double p = r["apparent_power"].get<double>();
            if (prev) kwh += 0.5 * (p + prev->second) * static_cast<double>(t - prev->first) / 3.6e9;
            prev = {t, p};
        }
        const double rel = std::abs(inv["kwh_billed"].get<double>() - kwh) / kwh;
        worst = std::max(worst, rel);
        detail += ", " + meter + " " + fmt(inv["kwh_billed"].get<double>()) + " vs " + fmt(kwh) + " kWh";
    }
    pass = pass && worst <= kEndToEndRelTolerance;
    detail += ", max relative error " + fmt(worst);

    pay_all(tmp.path, run);
    const auto verify = watt_cli({"ledger", "verify", "--data-dir", tmp.path.string()});
    const bool verified = verify.code == 0 && verify.out == "ok\n";
    detail += verified ? ", verify ok after 3 payments" : ", verify failed: " + verify.out;
    return {pass && verified, detail};
}

Verdict determinism() {
    TempDir tmp;
    const auto a = tmp.path / "a.ndjson";
    const auto b = tmp.path / "b.ndjson";
    expect_ok(watt_cli({"simulate", kScenario, "--out", a.string()}), "simulate");
    expect_ok(watt_cli({"simulate", kScenario, "--out", b.string()}), "simulate");
    const bool same_trace = read_file(a) == read_file(b);

    std::vector<std::string> heads;
    for (const auto* name : {"store-a", "store-b"}) {
        const auto dir = tmp.path / name;
        pay_all(dir, simulate_and_bill(dir));
        const auto show = watt_cli({"ledger", "show", "--data-dir", dir.string(), "--format", "json"});
        expect_ok(show, "ledger show");
        heads.push_back(nlohmann::json::parse(show.out).back()["hash"].get<std::string>());
    }
    return {same_trace && heads[0] == heads[1],
            std::string(same_trace ? "identical" : "different") + " NDJSON (" +
                std::to_string(read_lines(a).size()) + " lines), head hashes " + heads[0].substr(0, 16) + " / " +
                heads[1].substr(0, 16)};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"energy unit check", energy_unit_check},
        {"cost table pricing", cost_table_pricing},
        {"immutability under single-byte mutation", immutability},
        {"golden block hash", golden_hash},
        {"forecast recovery on synthetic hourly data", forecast_recovery},
        {"logistic trend gradient", logistic_gradient},
        {"pipeline oracle equivalence", pipeline_oracles},
        {"end-to-end billing of three meters", end_to_end},
        {"determinism", determinism},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        if (!v.pass) ++failures;
        std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
    }
    std::cout << criteria.size() - failures << "/" << criteria.size() << " criteria passed" << std::endl;
    return failures == 0 ? 0 : 1;
}
