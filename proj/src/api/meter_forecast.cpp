#include "watt/api/meter_forecast.hpp"

#include "watt/common/errors.hpp"
#include "watt/forecast/pipeline.hpp"

#include <algorithm>

namespace watt::api {

MeterForecast forecast_meter(const ingest::Store& store, const std::string& meter_id, std::int64_t horizon_ms,
                             const MeterForecastOptions& options) {
    if (options.step_ms <= 0) throw ValidationError("step_ms must be positive");
    if (horizon_ms < 0) throw ValidationError("horizon must not be negative");
    const auto range = store.time_range(meter_id);
    if (!range) throw PreconditionError("meter " + meter_id + " has no readings to forecast from");

    ingest::SeriesQuery q;
    q.meter_id = meter_id;
    q.from_ms = range->first;
    q.to_ms = range->second + 1;
    if (options.history_until_ms) q.to_ms = std::min(q.to_ms, *options.history_until_ms);
    q.step_ms = options.step_ms;
    q.agg = Aggregation::mean;
    q.field = options.field;
    if (q.to_ms <= q.from_ms) throw PreconditionError("meter " + meter_id + " has no readings before the cutoff");
    auto series = store.query_series(q);
    if (series.defined_count() < 2) {
        throw PreconditionError("meter " + meter_id + " needs readings in at least two buckets to forecast");
    }

    MeterForecast out;
    out.history = forecast::impute(forecast::impute(series, forecast::ImputeMethod::linear_interpolation),
                                   forecast::ImputeMethod::forward_fill);
    out.history = forecast::impute(out.history, forecast::ImputeMethod::backward_fill);

    forecast::ModelConfig config;
    if (options.config) {
        config = *options.config;
    } else {
        const auto span = out.history.timestamps.back() - out.history.timestamps.front();
        config.seasonalities = forecast::auto_seasonalities(forecast::default_seasonalities(), span, options.step_ms);
    }
    out.fit = forecast::fit(config, out.history);
    out.rows = forecast::predict(out.fit.model,
                                 forecast::future_times(out.history.timestamps.back(), options.step_ms, horizon_ms));
    return out;
}

billing::Projector forecast_projector(const ingest::Store& store, std::int64_t step_ms) {
    return {"forecast", [&store, step_ms](const billing::Goal& goal, std::int64_t now_ms, double kwh_used) {
                const auto until = std::clamp(now_ms, goal.period.start_ms, goal.period.end_ms);
                if (until >= goal.period.end_ms) return kwh_used;
                const auto range = store.time_range(goal.meter_id);
                if (!range || range->first >= until) {
                    throw PreconditionError("meter " + goal.meter_id + " has no readings to forecast from");
                }
                const auto last_edge = bucket_floor(std::min(range->second, until - 1), step_ms);
                MeterForecastOptions options;
                options.step_ms = step_ms;
                options.history_until_ms = until;
                const auto fc = forecast_meter(store, goal.meter_id, goal.period.end_ms - last_edge, options);
                // The bucket holding `until` is only partly observed; its
                // remainder runs at that bucket's mean.
                double kwh = kwh_used;
                const auto tail = std::min(last_edge + step_ms, goal.period.end_ms) - until;
                if (tail > 0) kwh += std::max(*fc.history.values.back(), 0.0) * static_cast<double>(tail) / 3.6e9;
                for (const auto& row : fc.rows) {
                    const auto lo = std::max(row.ds, until);
                    const auto hi = std::min(row.ds + step_ms, goal.period.end_ms);
                    if (hi > lo) kwh += std::max(row.yhat, 0.0) * static_cast<double>(hi - lo) / 3.6e9;
                }
                return kwh;
            }};
}

} // namespace watt::api
