#include "watt/cli/scenario.hpp"

#include "watt/common/errors.hpp"
#include "watt/common/io.hpp"
#include "watt/common/time_format.hpp"
#include "watt/ingest/store.hpp"

#include <set>

namespace watt::cli {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

std::int64_t integer(const json& v, const std::string& key) {
    if (!v.is_number_integer()) throw ConfigError("scenario: '" + key + "' must be an integer");
    return v.get<std::int64_t>();
}

std::int64_t time_value(const json& v, const std::string& key) {
    if (v.is_string()) {
        try {
            return parse_iso8601(v.get<std::string>());
        } catch (const ValidationError& e) {
            throw ConfigError("scenario: '" + key + "': " + e.what());
        }
    }
    return integer(v, key);
}

std::string text(const json& v, const std::string& key) {
    if (!v.is_string()) throw ConfigError("scenario: '" + key + "' must be a string");
    return v.get<std::string>();
}

ScenarioMeter meter_from_json(const json& j) {
    reject_unknown(j, {"meter_id", "profile", "relay_on", "account"}, "scenario meter");
    if (!j.contains("meter_id") || !j.contains("profile")) {
        throw ConfigError("scenario meter: 'meter_id' and 'profile' are required");
    }
    ScenarioMeter m;
    m.meter_id = text(j["meter_id"], "meter_id");
    m.profile = metersim::profile_from_json(j["profile"]);
    if (j.contains("relay_on")) {
        if (!j["relay_on"].is_boolean()) throw ConfigError("scenario meter: 'relay_on' must be a boolean");
        m.relay_on = j["relay_on"].get<bool>();
    }
    if (j.contains("account")) m.account = text(j["account"], "account");
    return m;
}

} // namespace

std::vector<metersim::MeterSpec> ScenarioConfig::meter_specs() const {
    std::vector<metersim::MeterSpec> specs;
    for (const auto& m : meters) specs.push_back({m.meter_id, m.profile, m.relay_on});
    return specs;
}

void ScenarioConfig::validate() const {
    if (interval_ms <= 0) throw ConfigError("scenario: interval_ms must be > 0");
    if (duration_ms < 0) throw ConfigError("scenario: duration_ms must be >= 0");
    if (meters.empty()) throw ConfigError("scenario: at least one meter is required");
    std::set<std::string> seen;
    for (const auto& m : meters) {
        try {
            ingest::validate_meter_id(m.meter_id);
        } catch (const ValidationError& e) {
            throw ConfigError(std::string("scenario: ") + e.what());
        }
        if (!seen.insert(m.meter_id).second) throw ConfigError("scenario: duplicate meter_id '" + m.meter_id + "'");
        m.profile.validate();
    }
    if (peak_threshold_va && !(*peak_threshold_va > 0.0)) throw ConfigError("scenario: peak_threshold_va must be > 0");
    for (const auto& [account, amount] : accounts) {
        if (amount < 0) throw ConfigError("scenario: opening balance of '" + account + "' is negative");
    }
    if (utility_account.empty()) throw ConfigError("scenario: utility_account must not be empty");
}

ScenarioConfig scenario_from_json(const json& j) {
    reject_unknown(j,
                   {"seed", "interval_ms", "start_ms", "duration_ms", "meters", "tariff", "tariff_file",
                    "peak_threshold_va", "accounts", "utility_account"},
                   "scenario");
    ScenarioConfig s;
    for (const char* key : {"seed", "interval_ms", "duration_ms", "meters"}) {
        if (!j.contains(key)) throw ConfigError(std::string("scenario: '") + key + "' is required");
    }
    if (!j["seed"].is_number_unsigned()) throw ConfigError("scenario: 'seed' must be a non-negative integer");
    s.seed = j["seed"].get<std::uint64_t>();
    s.interval_ms = integer(j["interval_ms"], "interval_ms");
    s.duration_ms = integer(j["duration_ms"], "duration_ms");
    if (j.contains("start_ms")) s.start_ms = time_value(j["start_ms"], "start_ms");
    if (!j["meters"].is_array()) throw ConfigError("scenario: 'meters' must be an array");
    for (const auto& m : j["meters"]) s.meters.push_back(meter_from_json(m));
    if (j.contains("tariff")) s.tariff = text(j["tariff"], "tariff");
    if (j.contains("tariff_file")) s.tariff_file = text(j["tariff_file"], "tariff_file");
    if (j.contains("peak_threshold_va")) {
        if (!j["peak_threshold_va"].is_number()) throw ConfigError("scenario: 'peak_threshold_va' must be a number");
        s.peak_threshold_va = j["peak_threshold_va"].get<double>();
    }
    if (j.contains("accounts")) {
        if (!j["accounts"].is_object()) throw ConfigError("scenario: 'accounts' must map account to paise");
        for (const auto& [account, amount] : j["accounts"].items()) s.accounts[account] = integer(amount, account);
    }
    if (j.contains("utility_account")) s.utility_account = text(j["utility_account"], "utility_account");
    s.validate();
    return s;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::string body;
    try {
        body = read_file(path);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    const auto j = json::parse(body, nullptr, false);
    if (j.is_discarded()) throw ConfigError(path.string() + ": not valid JSON");
    auto s = scenario_from_json(j);
    if (s.tariff_file && s.tariff_file->is_relative()) s.tariff_file = path.parent_path() / *s.tariff_file;
    return s;
}

void run_simulation(const ScenarioConfig& scenario, const std::function<void(const metersim::MeterReading&)>& sink) {
    scenario.validate();
    metersim::Fleet fleet(scenario.seed, scenario.meter_specs());
    for (std::int64_t k = 0; k < scenario.steps(); ++k) {
        for (const auto& r : fleet.step(scenario.start_ms + k * scenario.interval_ms)) sink(r);
    }
}

} // namespace watt::cli
