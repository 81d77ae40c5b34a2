#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>

namespace watt::metersim {

// Upper limit of the clamp-on current sensor.
inline constexpr double kMaxCurrentAmps = 100.0;

struct MeterReading {
    std::string meter_id;
    std::int64_t timestamp_ms = 0;
    double v_rms = 0.0;
    double i_rms = 0.0;
    double apparent_power = 0.0;
    double kwh_total = 0.0;

    bool operator==(const MeterReading&) const = default;
};

// Object with keys in the fixed order meter_id, timestamp_ms, v_rms, i_rms,
// apparent_power, kwh_total.
nlohmann::ordered_json to_json(const MeterReading& r);

// One NDJSON line (no trailing newline).
std::string to_ndjson_line(const MeterReading& r);

// Throws ValidationError on missing or mistyped fields. Extra keys are ignored
// so stored records (which carry store_offset) parse too.
MeterReading reading_from_json(const nlohmann::json& j);

} // namespace watt::metersim
