#include "watt/common/time_series.hpp"

#include "watt/common/errors.hpp"

#include <algorithm>

namespace watt {

std::size_t TimeSeries::defined_count() const {
    return static_cast<std::size_t>(
        std::count_if(values.begin(), values.end(), [](const auto& v) { return v.has_value(); }));
}

void TimeSeries::validate() const {
    if (timestamps.size() != values.size()) {
        throw ValidationError("time series: timestamps and values differ in length");
    }
    for (std::size_t i = 1; i < timestamps.size(); ++i) {
        if (timestamps[i] <= timestamps[i - 1]) {
            throw ValidationError("time series: timestamps must strictly increase");
        }
    }
}

Aggregation parse_aggregation(std::string_view name) {
    if (name == "mean") return Aggregation::mean;
    if (name == "max") return Aggregation::max;
    if (name == "last") return Aggregation::last;
    if (name == "sum") return Aggregation::sum;
    throw ValidationError("unknown aggregation '" + std::string(name) + "'");
}

std::string to_string(Aggregation agg) {
    switch (agg) {
    case Aggregation::mean: return "mean";
    case Aggregation::max: return "max";
    case Aggregation::last: return "last";
    case Aggregation::sum: return "sum";
    }
    return "mean";
}

std::int64_t bucket_floor(std::int64_t t, std::int64_t step_ms) {
    if (step_ms <= 0) throw DomainError("bucket step must be positive");
    std::int64_t q = t / step_ms;
    if (t % step_ms != 0 && t < 0) --q;
    return q * step_ms;
}

namespace {

struct Accumulator {
    double sum = 0.0;
    double max = 0.0;
    double last = 0.0;
    std::size_t count = 0;

    void add(double v) {
        sum += v;
        max = count == 0 ? v : std::max(max, v);
        last = v;
        ++count;
    }

    std::optional<double> result(Aggregation agg) const {
        if (count == 0) return std::nullopt;
        switch (agg) {
        case Aggregation::mean: return sum / static_cast<double>(count);
        case Aggregation::max: return max;
        case Aggregation::last: return last;
        case Aggregation::sum: return sum;
        }
        return std::nullopt;
    }
};

} // namespace

TimeSeries aggregate_buckets(const TimeSeries& series, std::int64_t step_ms, Aggregation agg,
                             std::int64_t first_edge, std::int64_t last_edge) {
    if (step_ms <= 0) throw DomainError("bucket step must be positive");
    TimeSeries out;
    if (last_edge < first_edge) return out;

    const auto n_buckets = static_cast<std::size_t>((last_edge - first_edge) / step_ms + 1);
    std::vector<Accumulator> acc(n_buckets);
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!series.values[i]) continue;
        const std::int64_t edge = bucket_floor(series.timestamps[i], step_ms);
        if (edge < first_edge || edge > last_edge) continue;
        acc[static_cast<std::size_t>((edge - first_edge) / step_ms)].add(*series.values[i]);
    }

    out.timestamps.reserve(n_buckets);
    out.values.reserve(n_buckets);
    for (std::size_t b = 0; b < n_buckets; ++b) {
        out.push_back(first_edge + static_cast<std::int64_t>(b) * step_ms, acc[b].result(agg));
    }
    return out;
}

} // namespace watt
