#include "watt/metersim/reading.hpp"

#include "watt/common/errors.hpp"

namespace watt::metersim {

nlohmann::ordered_json to_json(const MeterReading& r) {
    nlohmann::ordered_json j;
    j["meter_id"] = r.meter_id;
    j["timestamp_ms"] = r.timestamp_ms;
    j["v_rms"] = r.v_rms;
    j["i_rms"] = r.i_rms;
    j["apparent_power"] = r.apparent_power;
    j["kwh_total"] = r.kwh_total;
    return j;
}

std::string to_ndjson_line(const MeterReading& r) { return to_json(r).dump(); }

namespace {

double number_field(const nlohmann::json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_number()) {
        throw ValidationError(std::string("reading: missing or non-numeric '") + key + "'");
    }
    return it->get<double>();
}

} // namespace

MeterReading reading_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("reading: expected a JSON object");
    MeterReading r;
    const auto id = j.find("meter_id");
    if (id == j.end() || !id->is_string()) throw ValidationError("reading: missing 'meter_id'");
    r.meter_id = id->get<std::string>();
    const auto ts = j.find("timestamp_ms");
    if (ts == j.end() || !ts->is_number_integer()) {
        throw ValidationError("reading: 'timestamp_ms' must be an integer");
    }
    r.timestamp_ms = ts->get<std::int64_t>();
    r.v_rms = number_field(j, "v_rms");
    r.i_rms = number_field(j, "i_rms");
    r.apparent_power = number_field(j, "apparent_power");
    r.kwh_total = number_field(j, "kwh_total");
    return r;
}

} // namespace watt::metersim
