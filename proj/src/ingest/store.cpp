#include "watt/ingest/store.hpp"

#include "watt/common/errors.hpp"
#include "watt/common/io.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace watt::ingest {

nlohmann::ordered_json to_json(const ReadingRecord& record) {
    auto j = metersim::to_json(record.reading);
    j["store_offset"] = record.store_offset;
    return j;
}

Field parse_field(std::string_view name) {
    if (name == "apparent_power") return Field::apparent_power;
    if (name == "kwh_total") return Field::kwh_total;
    if (name == "v_rms") return Field::v_rms;
    if (name == "i_rms") return Field::i_rms;
    throw ValidationError("unknown field '" + std::string(name) + "'");
}

std::string to_string(Field field) {
    switch (field) {
    case Field::apparent_power: return "apparent_power";
    case Field::kwh_total: return "kwh_total";
    case Field::v_rms: return "v_rms";
    case Field::i_rms: return "i_rms";
    }
    return "apparent_power";
}

double field_value(const MeterReading& r, Field field) {
    switch (field) {
    case Field::apparent_power: return r.apparent_power;
    case Field::kwh_total: return r.kwh_total;
    case Field::v_rms: return r.v_rms;
    case Field::i_rms: return r.i_rms;
    }
    return r.apparent_power;
}

Aggregation SeriesQuery::effective_aggregation() const {
    if (agg) return *agg;
    return field == Field::kwh_total ? Aggregation::max : Aggregation::mean;
}

void SeriesQuery::validate() const {
    if (from_ms >= to_ms) throw ValidationError("series query: from must be before to");
    if (step_ms && *step_ms <= 0) throw ValidationError("series query: step must be positive");
}

void validate_reading(const MeterReading& r) {
    validate_meter_id(r.meter_id);
    if (!std::isfinite(r.v_rms) || r.v_rms < 0.0) throw ValidationError("reading: v_rms must be finite and >= 0");
    if (!std::isfinite(r.i_rms) || r.i_rms < 0.0 || r.i_rms > metersim::kMaxCurrentAmps) {
        throw ValidationError("reading: i_rms must lie in [0, 100] A");
    }
    if (!std::isfinite(r.kwh_total) || r.kwh_total < 0.0) throw ValidationError("reading: kwh_total must be >= 0");
    if (!std::isfinite(r.apparent_power) || r.apparent_power < 0.0) {
        throw ValidationError("reading: apparent_power must be finite and >= 0");
    }
    const double expected = r.v_rms * r.i_rms;
    if (std::abs(r.apparent_power - expected) > 1e-9 * std::max(expected, r.apparent_power) + 1e-12) {
        throw ValidationError("reading: apparent_power does not equal v_rms * i_rms");
    }
}

void validate_meter_id(std::string_view meter_id) {
    if (meter_id.empty() || meter_id.size() > 128 || meter_id.front() == '.') {
        throw ValidationError("invalid meter_id '" + std::string(meter_id) + "'");
    }
    for (const char c : meter_id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                        c == '_' || c == '.';
        if (!ok) throw ValidationError("invalid meter_id '" + std::string(meter_id) + "'");
    }
}

Store::Store() = default;

Store::Store(std::filesystem::path directory) : directory_(std::move(directory)) {
    std::filesystem::create_directories(*directory_);
    replay();
}

Store::~Store() = default;

void Store::replay() {
    for (const auto& entry : std::filesystem::directory_iterator(*directory_)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".ndjson") continue;
        const std::string meter_id = entry.path().stem().string();
        validate_meter_id(meter_id);
        auto log = std::make_unique<MeterLog>();
        for (const auto& line : read_lines(entry.path())) {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw CorruptDataError(entry.path().string() + ": " + e.what());
            }
            ReadingRecord rec{metersim::reading_from_json(j), j.value("store_offset", std::uint64_t{0})};
            if (rec.reading.meter_id != meter_id) {
                throw CorruptDataError(entry.path().string() + ": record for another meter");
            }
            if (rec.store_offset != log->records.size()) {
                throw CorruptDataError(entry.path().string() + ": offsets are not dense");
            }
            if (!log->records.empty() && rec.reading.timestamp_ms <= log->records.back().reading.timestamp_ms) {
                throw CorruptDataError(entry.path().string() + ": timestamps out of order");
            }
            log->records.push_back(std::move(rec));
        }
        log->file.open(entry.path(), std::ios::binary | std::ios::app);
        logs_.emplace(meter_id, std::move(log));
    }
}

Store::MeterLog& Store::ensure_log(std::string_view meter_id) {
    {
        std::shared_lock lock(map_mutex_);
        if (auto it = logs_.find(meter_id); it != logs_.end()) return *it->second;
    }
    validate_meter_id(meter_id);
    std::unique_lock lock(map_mutex_);
    auto [it, inserted] = logs_.try_emplace(std::string(meter_id), nullptr);
    if (inserted) {
        it->second = std::make_unique<MeterLog>();
        if (directory_) {
            it->second->file.open(*directory_ / (std::string(meter_id) + ".ndjson"), std::ios::binary | std::ios::app);
            if (!it->second->file) throw Error("cannot open log for meter '" + std::string(meter_id) + "'");
        }
    }
    return *it->second;
}

const Store::MeterLog& Store::find_log(std::string_view meter_id) const {
    std::shared_lock lock(map_mutex_);
    auto it = logs_.find(meter_id);
    if (it == logs_.end()) throw NotFoundError("unknown meter '" + std::string(meter_id) + "'");
    return *it->second;
}

void Store::register_meter(std::string_view meter_id) { ensure_log(meter_id); }

std::uint64_t Store::submit_reading(const MeterReading& r) {
    validate_reading(r);
    auto& log = ensure_log(r.meter_id);
    std::unique_lock lock(log.mutex);
    if (!log.records.empty() && r.timestamp_ms <= log.records.back().reading.timestamp_ms) {
        throw OrderingError("reading at " + std::to_string(r.timestamp_ms) + " ms is not after the last stored reading");
    }
    ReadingRecord rec{r, log.records.size()};
    if (log.file.is_open()) {
        log.file << to_json(rec).dump() << '\n';
        log.file.flush();
        if (!log.file) throw Error("failed to persist reading for meter '" + r.meter_id + "'");
    }
    log.records.push_back(std::move(rec));
    return log.records.back().store_offset;
}

namespace {

// Index of the first record with timestamp >= t.
std::size_t lower_index(const std::vector<ReadingRecord>& records, std::int64_t t) {
    auto it = std::lower_bound(records.begin(), records.end(), t,
                               [](const ReadingRecord& r, std::int64_t v) { return r.reading.timestamp_ms < v; });
    return static_cast<std::size_t>(it - records.begin());
}

} // namespace

TimeSeries Store::query_series(const SeriesQuery& q) const {
    q.validate();
    const auto& log = find_log(q.meter_id);
    TimeSeries raw;
    {
        std::shared_lock lock(log.mutex);
        for (std::size_t i = lower_index(log.records, q.from_ms);
             i < log.records.size() && log.records[i].reading.timestamp_ms < q.to_ms; ++i) {
            raw.push_back(log.records[i].reading.timestamp_ms, field_value(log.records[i].reading, q.field));
        }
    }
    if (!q.step_ms) return raw;
    return aggregate_buckets(raw, *q.step_ms, q.effective_aggregation(), bucket_floor(q.from_ms, *q.step_ms),
                             bucket_floor(q.to_ms - 1, *q.step_ms));
}

std::optional<ReadingRecord> Store::latest(std::string_view meter_id) const {
    const auto& log = find_log(meter_id);
    std::shared_lock lock(log.mutex);
    if (log.records.empty()) return std::nullopt;
    return log.records.back();
}

std::vector<ReadingRecord> Store::records(std::string_view meter_id, std::int64_t from_ms, std::int64_t to_ms) const {
    const auto& log = find_log(meter_id);
    std::shared_lock lock(log.mutex);
    std::vector<ReadingRecord> out;
    for (std::size_t i = lower_index(log.records, from_ms);
         i < log.records.size() && log.records[i].reading.timestamp_ms < to_ms; ++i) {
        out.push_back(log.records[i]);
    }
    return out;
}

std::optional<MeterReading> Store::reading_at_or_before(std::string_view meter_id, std::int64_t t_ms) const {
    const auto& log = find_log(meter_id);
    std::shared_lock lock(log.mutex);
    const std::size_t after = lower_index(log.records, t_ms == INT64_MAX ? t_ms : t_ms + 1);
    if (after == 0) return std::nullopt;
    return log.records[after - 1].reading;
}

std::optional<std::pair<std::int64_t, std::int64_t>> Store::time_range(std::string_view meter_id) const {
    const auto& log = find_log(meter_id);
    std::shared_lock lock(log.mutex);
    if (log.records.empty()) return std::nullopt;
    return std::pair{log.records.front().reading.timestamp_ms, log.records.back().reading.timestamp_ms};
}

std::vector<std::string> Store::meter_ids() const {
    std::shared_lock lock(map_mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, log] : logs_) ids.push_back(id);
    return ids;
}

bool Store::contains(std::string_view meter_id) const {
    std::shared_lock lock(map_mutex_);
    return logs_.find(meter_id) != logs_.end();
}

std::size_t Store::reading_count(std::string_view meter_id) const {
    const auto& log = find_log(meter_id);
    std::shared_lock lock(log.mutex);
    return log.records.size();
}

} // namespace watt::ingest
