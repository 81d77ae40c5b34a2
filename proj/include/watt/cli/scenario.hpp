#pragma once

#include "watt/ledger/chain.hpp"
#include "watt/metersim/fleet.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace watt::cli {

struct ScenarioMeter {
    std::string meter_id;
    metersim::ApplianceProfile profile;
    bool relay_on = true;
    std::optional<std::string> account; // consumer account, defaults to the meter id
};

// The single JSON configuration file shared by every subcommand. Unknown keys
// are rejected at every level.
struct ScenarioConfig {
    std::uint64_t seed = 0;
    std::int64_t interval_ms = 60'000;
    std::int64_t start_ms = 0;
    std::int64_t duration_ms = 0;
    std::vector<ScenarioMeter> meters;
    std::string tariff = "state";
    std::optional<std::filesystem::path> tariff_file;
    std::optional<double> peak_threshold_va;
    ledger::Balances accounts; // opening balances in paise
    std::string utility_account = "utility";

    // Samples per meter: the first lands on start_ms.
    std::int64_t steps() const { return duration_ms / interval_ms; }

    std::vector<metersim::MeterSpec> meter_specs() const;

    // Throws ConfigError.
    void validate() const;
};

// Throws ConfigError for a schema violation.
ScenarioConfig scenario_from_json(const nlohmann::json& j);

// Relative tariff_file paths resolve against the config file's directory.
// Throws ConfigError for unreadable or malformed files.
ScenarioConfig load_scenario(const std::filesystem::path& path);

// Runs the fleet for the configured duration, passing readings to `sink` in
// time order (fleet order within a step).
void run_simulation(const ScenarioConfig& scenario, const std::function<void(const metersim::MeterReading&)>& sink);

} // namespace watt::cli
