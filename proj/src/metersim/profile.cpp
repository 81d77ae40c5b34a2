#include "watt/metersim/profile.hpp"

#include "watt/common/errors.hpp"
#include "watt/common/time_format.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace watt::metersim {

void ApplianceProfile::validate() const {
    if (!std::isfinite(rated_power) || rated_power < 0.0) {
        throw ConfigError("profile '" + name + "': rated_power must be >= 0");
    }
    if (!(power_factor > 0.0 && power_factor <= 1.0)) {
        throw ConfigError("profile '" + name + "': power_factor must be in (0, 1]");
    }
    if (!(noise_sigma_v >= 0.0) || !(noise_sigma_frac_i >= 0.0)) {
        throw ConfigError("profile '" + name + "': noise sigmas must be >= 0");
    }
    auto windows = duty_schedule;
    std::sort(windows.begin(), windows.end(),
              [](const DutyWindow& a, const DutyWindow& b) { return a.start_minute < b.start_minute; });
    for (std::size_t i = 0; i < windows.size(); ++i) {
        const auto& w = windows[i];
        if (w.start_minute < 0 || w.start_minute >= kMinutesPerDay || w.end_minute <= w.start_minute ||
            w.end_minute > kMinutesPerDay) {
            throw ConfigError("profile '" + name + "': duty window outside [0, 1440) or empty");
        }
        if (i > 0 && w.start_minute < windows[i - 1].end_minute) {
            throw ConfigError("profile '" + name + "': duty windows overlap");
        }
    }
}

bool ApplianceProfile::active_at_minute(int minute_of_day) const {
    if (duty_schedule.empty()) return true;
    return std::any_of(duty_schedule.begin(), duty_schedule.end(), [&](const DutyWindow& w) {
        return minute_of_day >= w.start_minute && minute_of_day < w.end_minute;
    });
}

bool ApplianceProfile::active_at(std::int64_t timestamp_ms) const {
    std::int64_t in_day = timestamp_ms % kMillisPerDay;
    if (in_day < 0) in_day += kMillisPerDay;
    return active_at_minute(static_cast<int>(in_day / kMillisPerMinute));
}

nlohmann::ordered_json to_json(const ApplianceProfile& p) {
    nlohmann::ordered_json j;
    j["name"] = p.name;
    j["rated_power"] = p.rated_power;
    j["power_factor"] = p.power_factor;
    auto schedule = nlohmann::ordered_json::array();
    for (const auto& w : p.duty_schedule) schedule.push_back({w.start_minute, w.end_minute});
    j["duty_schedule"] = schedule;
    j["noise_sigma_v"] = p.noise_sigma_v;
    j["noise_sigma_frac_i"] = p.noise_sigma_frac_i;
    return j;
}

namespace {

double number(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError("profile: '" + key + "' must be a number");
    return v.get<double>();
}

} // namespace

ApplianceProfile profile_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("profile: expected an object");
    static const std::set<std::string> known{"name",          "rated_power",   "power_factor",
                                             "duty_schedule", "noise_sigma_v", "noise_sigma_frac_i"};
    ApplianceProfile p;
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) throw ConfigError("profile: unknown key '" + key + "'");
        if (key == "name") {
            if (!value.is_string()) throw ConfigError("profile: 'name' must be a string");
            p.name = value.get<std::string>();
        } else if (key == "rated_power") {
            p.rated_power = number(value, key);
        } else if (key == "power_factor") {
            p.power_factor = number(value, key);
        } else if (key == "noise_sigma_v") {
            p.noise_sigma_v = number(value, key);
        } else if (key == "noise_sigma_frac_i") {
            p.noise_sigma_frac_i = number(value, key);
        } else if (key == "duty_schedule") {
            if (!value.is_array()) throw ConfigError("profile: 'duty_schedule' must be an array");
            for (const auto& w : value) {
                if (!w.is_array() || w.size() != 2 || !w[0].is_number_integer() || !w[1].is_number_integer()) {
                    throw ConfigError("profile: duty window must be [start_minute, end_minute]");
                }
                p.duty_schedule.push_back({w[0].get<int>(), w[1].get<int>()});
            }
        }
    }
    if (!j.contains("rated_power")) throw ConfigError("profile: 'rated_power' is required");
    p.validate();
    return p;
}

} // namespace watt::metersim
