#pragma once

#include "watt/forecast/model.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace watt::forecast {

// Training data from CSV with a header row: ds (ISO-8601 or epoch
// milliseconds), y (empty for missing), then any regressor columns.
struct ForecastData {
    TimeSeries y;
    Regressors regressors;
};

ForecastData parse_forecast_csv(std::string_view text);
ForecastData read_forecast_csv(const std::filesystem::path& path);

// Holiday rows "holiday,ds,lower_window,upper_window"; rows sharing a name
// become one holiday with several dates.
std::vector<Holiday> parse_holidays_csv(std::string_view text);
std::vector<Holiday> read_holidays_csv(const std::filesystem::path& path);

// Header ds,yhat,trend,seasonal,holiday,regressor.
std::string forecast_csv(const std::vector<ForecastRow>& rows);

} // namespace watt::forecast
