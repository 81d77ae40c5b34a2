#pragma once

#include "watt/common/time_series.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace watt::forecast {

enum class ImputeMethod { forward_fill, backward_fill, linear_interpolation };
enum class OutlierMethod { zscore, iqr };

ImputeMethod parse_impute_method(std::string_view name);
std::string to_string(ImputeMethod m);
OutlierMethod parse_outlier_method(std::string_view name);
std::string to_string(OutlierMethod m);

struct PipelineConfig {
    ImputeMethod impute_method = ImputeMethod::linear_interpolation;
    OutlierMethod outlier_method = OutlierMethod::zscore;
    double zscore_threshold = 3.0;
    double iqr_multiplier = 1.5;
    std::optional<std::int64_t> resample_step_ms;
    Aggregation resample_agg = Aggregation::mean;
    double split_fraction = 0.8;
    bool normalize = false;

    // Throws ConfigError.
    void validate() const;
};

// Replaces missing values. Forward fill leaves a leading gap, backward fill a
// trailing one, and linear interpolation (time-weighted between the nearest
// defined neighbours) leaves both. Throws ValidationError when nothing is
// defined.
TimeSeries impute(const TimeSeries& series, ImputeMethod method);

// Flags defined values. zscore: |x - mean| / population std >= threshold,
// nothing flagged at zero variance. iqr: outside
// [Q1 - threshold*IQR, Q3 + threshold*IQR] with linearly interpolated
// quartiles; at zero IQR everything other than the median is flagged.
// Needs at least 2 (zscore) or 4 (iqr) defined values; throws
// ValidationError otherwise.
std::vector<bool> detect_outliers(const TimeSeries& series, OutlierMethod method, double threshold);

// Quantile of sorted data by linear interpolation between order statistics
// (type 7).
double quantile_sorted(const std::vector<double>& sorted, double p);

// Left-edge buckets covering the series' first to last timestamp. Empty
// buckets are missing.
TimeSeries resample(const TimeSeries& series, std::int64_t step_ms, Aggregation agg);

struct Decomposition {
    TimeSeries trend;
    TimeSeries seasonal;
    TimeSeries residual;
};

// Classical additive decomposition with a centered moving average (2 x period
// for even periods). Seasonal is defined everywhere and sums to zero over a
// period; trend and residual are missing where the average is undefined.
// Needs a regular series with no missing values and length >= 2 * period.
Decomposition decompose(const TimeSeries& series, std::size_t period);

// Min-max scaling fitted on one sample. A constant sample scales by 1.
struct MinMaxScaling {
    double min = 0.0;
    double range = 1.0;

    double scale(double x) const { return (x - min) / range; }
    double unscale(double x) const { return x * range + min; }
    TimeSeries scale(const TimeSeries& s) const;
    TimeSeries unscale(const TimeSeries& s) const;
};

MinMaxScaling fit_min_max(const TimeSeries& sample);

struct SplitResult {
    TimeSeries train;
    TimeSeries test;
    MinMaxScaling scaling; // identity when normalization is off
};

// Splits in time order at floor(n * split_fraction), keeping at least one
// point on each side, then scales both parts with parameters from train.
SplitResult split_and_normalize(const TimeSeries& series, const PipelineConfig& config);

// Resample (if configured), impute, blank out outliers and impute again.
TimeSeries clean(const TimeSeries& series, const PipelineConfig& config);

} // namespace watt::forecast
