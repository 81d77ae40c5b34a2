#pragma once

#include "watt/billing/service.hpp"
#include "watt/common/time_format.hpp"
#include "watt/forecast/model.hpp"
#include "watt/ingest/store.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace watt::api {

struct MeterForecastOptions {
    std::int64_t step_ms = kMillisPerHour;
    ingest::Field field = ingest::Field::apparent_power;
    // Readings at or after this time are ignored. Unset: use everything.
    std::optional<std::int64_t> history_until_ms;
    // Unset: default model settings with the seasonalities the history can support.
    std::optional<forecast::ModelConfig> config;
};

struct MeterForecast {
    TimeSeries history; // bucket means, gaps filled
    forecast::FitResult fit;
    std::vector<forecast::ForecastRow> rows;
};

// Fits the meter's bucketed history and predicts horizon_ms past its last
// bucket. Throws PreconditionError when fewer than two buckets have data.
MeterForecast forecast_meter(const ingest::Store& store, const std::string& meter_id, std::int64_t horizon_ms,
                             const MeterForecastOptions& options = {});

// Goal projection that adds forecast consumption for the rest of the period
// to what has been used so far. Predicted power below zero counts as zero.
billing::Projector forecast_projector(const ingest::Store& store, std::int64_t step_ms = kMillisPerHour);

} // namespace watt::api
