#pragma once

#include "watt/common/time_series.hpp"
#include "watt/metersim/reading.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace watt::ingest {

using metersim::MeterReading;

struct ReadingRecord {
    MeterReading reading;
    std::uint64_t store_offset = 0;

    bool operator==(const ReadingRecord&) const = default;
};

nlohmann::ordered_json to_json(const ReadingRecord& record);

enum class Field { apparent_power, kwh_total, v_rms, i_rms };

Field parse_field(std::string_view name);
std::string to_string(Field field);
double field_value(const MeterReading& r, Field field);

// Half-open [from_ms, to_ms). With step_ms set, values are bucketed on
// left-edge buckets [k*step, (k+1)*step). When agg is unset it defaults to
// mean, or max for the cumulative kwh_total field.
struct SeriesQuery {
    std::string meter_id;
    std::int64_t from_ms = 0;
    std::int64_t to_ms = 0;
    std::optional<std::int64_t> step_ms;
    std::optional<Aggregation> agg;
    Field field = Field::apparent_power;

    Aggregation effective_aggregation() const;
    void validate() const;
};

// Throws ValidationError for a reading the sensors could not have produced:
// negative or non-finite voltage, current outside [0, 100] A, negative
// energy, or an apparent power inconsistent with v_rms * i_rms.
void validate_reading(const MeterReading& r);

// Throws ValidationError unless the id is usable as a file name stem.
void validate_meter_id(std::string_view meter_id);

// Per-meter append-only reading logs. With a directory, each meter's log is
// mirrored to <dir>/<meter_id>.ndjson and replayed on construction.
//
// Writers to one meter are serialized; different meters proceed
// independently. Readers see a consistent prefix of each log.
class Store {
public:
    Store();
    explicit Store(std::filesystem::path directory);
    ~Store();

    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    // Makes a meter known without readings. Idempotent.
    void register_meter(std::string_view meter_id);

    // Validates and appends. Returns the dense per-meter offset. Throws
    // ValidationError or OrderingError (timestamp not after the last one).
    std::uint64_t submit_reading(const MeterReading& r);

    // Throws NotFoundError for an unknown meter.
    TimeSeries query_series(const SeriesQuery& q) const;

    // NotFoundError for unknown meter; nullopt for a meter with no readings.
    std::optional<ReadingRecord> latest(std::string_view meter_id) const;

    // Raw records with timestamps in [from_ms, to_ms).
    std::vector<ReadingRecord> records(std::string_view meter_id, std::int64_t from_ms, std::int64_t to_ms) const;

    // The last reading with timestamp <= t_ms, if any.
    std::optional<MeterReading> reading_at_or_before(std::string_view meter_id, std::int64_t t_ms) const;

    // Timestamps of the first and last stored reading, if any.
    std::optional<std::pair<std::int64_t, std::int64_t>> time_range(std::string_view meter_id) const;

    std::vector<std::string> meter_ids() const;
    bool contains(std::string_view meter_id) const;
    std::size_t reading_count(std::string_view meter_id) const;

    const std::optional<std::filesystem::path>& directory() const { return directory_; }

private:
    struct MeterLog {
        mutable std::shared_mutex mutex;
        std::vector<ReadingRecord> records;
        std::ofstream file;
    };

    MeterLog& ensure_log(std::string_view meter_id);
    const MeterLog& find_log(std::string_view meter_id) const;
    void replay();

    std::optional<std::filesystem::path> directory_;
    mutable std::shared_mutex map_mutex_;
    std::map<std::string, std::unique_ptr<MeterLog>, std::less<>> logs_;
};

} // namespace watt::ingest
