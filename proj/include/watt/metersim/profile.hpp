#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace watt::metersim {

inline constexpr int kMinutesPerDay = 1440;

// Half-open on-window [start_minute, end_minute) within a UTC day.
struct DutyWindow {
    int start_minute = 0;
    int end_minute = kMinutesPerDay;

    bool operator==(const DutyWindow&) const = default;
};

struct ApplianceProfile {
    std::string name;
    double rated_power = 0.0; // W
    std::vector<DutyWindow> duty_schedule; // empty: always on
    double power_factor = 1.0;
    double noise_sigma_v = 2.0;
    double noise_sigma_frac_i = 0.01;

    // Throws ConfigError when rated_power < 0, power_factor outside (0, 1],
    // a sigma is negative, or windows fall outside the day or overlap.
    void validate() const;

    bool active_at_minute(int minute_of_day) const;
    bool active_at(std::int64_t timestamp_ms) const;

    bool operator==(const ApplianceProfile&) const = default;
};

nlohmann::ordered_json to_json(const ApplianceProfile& p);

// Strict parser: unknown keys are a ConfigError. The result is validated.
ApplianceProfile profile_from_json(const nlohmann::json& j);

} // namespace watt::metersim
