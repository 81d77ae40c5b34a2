#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace watt {

// Ordered (timestamp, value) pairs. A value of std::nullopt is an explicit
// missing marker. Timestamps are milliseconds since the Unix epoch.
struct TimeSeries {
    std::vector<std::int64_t> timestamps;
    std::vector<std::optional<double>> values;

    std::size_t size() const { return timestamps.size(); }
    bool empty() const { return timestamps.empty(); }

    void push_back(std::int64_t t, std::optional<double> v) {
        timestamps.push_back(t);
        values.push_back(v);
    }

    std::size_t defined_count() const;

    // Throws ValidationError unless lengths match and timestamps strictly increase.
    void validate() const;

    bool operator==(const TimeSeries&) const = default;
};

enum class Aggregation { mean, max, last, sum };

Aggregation parse_aggregation(std::string_view name);
std::string to_string(Aggregation agg);

// Left edge of the bucket [k*step, (k+1)*step) containing t. Floors toward
// negative infinity so negative timestamps bucket consistently.
std::int64_t bucket_floor(std::int64_t t, std::int64_t step_ms);

// Aggregates `series` into the buckets whose left edges run from
// first_edge to last_edge inclusive (both multiples of step_ms). Missing
// input values are skipped; a bucket with no defined values is missing.
TimeSeries aggregate_buckets(const TimeSeries& series, std::int64_t step_ms, Aggregation agg,
                             std::int64_t first_edge, std::int64_t last_edge);

} // namespace watt
