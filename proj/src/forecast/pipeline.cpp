#include "watt/forecast/pipeline.hpp"

#include "watt/common/errors.hpp"

#include <algorithm>
#include <cmath>

namespace watt::forecast {

ImputeMethod parse_impute_method(std::string_view name) {
    if (name == "forward_fill" || name == "ffill") return ImputeMethod::forward_fill;
    if (name == "backward_fill" || name == "bfill") return ImputeMethod::backward_fill;
    if (name == "linear_interpolation" || name == "linear") return ImputeMethod::linear_interpolation;
    throw ValidationError("unknown impute method '" + std::string(name) + "'");
}

std::string to_string(ImputeMethod m) {
    switch (m) {
    case ImputeMethod::forward_fill: return "forward_fill";
    case ImputeMethod::backward_fill: return "backward_fill";
    case ImputeMethod::linear_interpolation: return "linear_interpolation";
    }
    return "linear_interpolation";
}

OutlierMethod parse_outlier_method(std::string_view name) {
    if (name == "zscore") return OutlierMethod::zscore;
    if (name == "iqr") return OutlierMethod::iqr;
    throw ValidationError("unknown outlier method '" + std::string(name) + "'");
}

std::string to_string(OutlierMethod m) { return m == OutlierMethod::iqr ? "iqr" : "zscore"; }

void PipelineConfig::validate() const {
    if (!(zscore_threshold > 0.0)) throw ConfigError("zscore_threshold must be > 0");
    if (!(iqr_multiplier > 0.0)) throw ConfigError("iqr_multiplier must be > 0");
    if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw ConfigError("split_fraction must be in (0, 1)");
    if (resample_step_ms && *resample_step_ms <= 0) throw ConfigError("resample_step_ms must be > 0");
}

TimeSeries impute(const TimeSeries& series, ImputeMethod method) {
    series.validate();
    if (series.defined_count() == 0) throw ValidationError("cannot impute a series with no defined values");
    TimeSeries out = series;
    auto& v = out.values;
    const std::size_t n = v.size();
    switch (method) {
    case ImputeMethod::forward_fill:
        for (std::size_t i = 1; i < n; ++i) {
            if (!v[i]) v[i] = v[i - 1];
        }
        break;
    case ImputeMethod::backward_fill:
        for (std::size_t i = n - 1; i-- > 0;) {
            if (!v[i]) v[i] = v[i + 1];
        }
        break;
    case ImputeMethod::linear_interpolation: {
        std::optional<std::size_t> prev;
        for (std::size_t i = 0; i < n; ++i) {
            if (!series.values[i]) continue;
            if (prev && i > *prev + 1) {
                const double t0 = static_cast<double>(series.timestamps[*prev]);
                const double t1 = static_cast<double>(series.timestamps[i]);
                const double y0 = *series.values[*prev];
                const double y1 = *series.values[i];
                for (std::size_t j = *prev + 1; j < i; ++j) {
                    const double w = (static_cast<double>(series.timestamps[j]) - t0) / (t1 - t0);
                    v[j] = y0 + w * (y1 - y0);
                }
            }
            prev = i;
        }
        break;
    }
    }
    return out;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw ValidationError("quantile of an empty sample");
    const double h = static_cast<double>(sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

std::vector<bool> detect_outliers(const TimeSeries& series, OutlierMethod method, double threshold) {
    if (!(threshold > 0.0)) throw ValidationError("outlier threshold must be > 0");
    std::vector<double> defined;
    for (const auto& v : series.values) {
        if (v) defined.push_back(*v);
    }
    std::vector<bool> flags(series.size(), false);

    if (method == OutlierMethod::zscore) {
        if (defined.size() < 2) throw ValidationError("z-score needs at least 2 defined values");
        double mean = 0.0;
        for (double x : defined) mean += x;
        mean /= static_cast<double>(defined.size());
        double ss = 0.0;
        for (double x : defined) ss += (x - mean) * (x - mean);
        const double sd = std::sqrt(ss / static_cast<double>(defined.size()));
        if (sd == 0.0) return flags;
        for (std::size_t i = 0; i < series.size(); ++i) {
            const auto& v = series.values[i];
            flags[i] = v && std::abs(*v - mean) / sd >= threshold;
        }
        return flags;
    }

    if (defined.size() < 4) throw ValidationError("IQR needs at least 4 defined values");
    std::sort(defined.begin(), defined.end());
    const double q1 = quantile_sorted(defined, 0.25);
    const double q3 = quantile_sorted(defined, 0.75);
    const double iqr = q3 - q1;
    if (iqr == 0.0) {
        const double median = quantile_sorted(defined, 0.5);
        for (std::size_t i = 0; i < series.size(); ++i) {
            const auto& v = series.values[i];
            flags[i] = v && *v != median;
        }
        return flags;
    }
    const double lo = q1 - threshold * iqr;
    const double hi = q3 + threshold * iqr;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& v = series.values[i];
        flags[i] = v && (*v < lo || *v > hi);
    }
    return flags;
}

TimeSeries resample(const TimeSeries& series, std::int64_t step_ms, Aggregation agg) {
    if (step_ms <= 0) throw ValidationError("resample step must be > 0");
    series.validate();
    if (series.empty()) return {};
    return aggregate_buckets(series, step_ms, agg, bucket_floor(series.timestamps.front(), step_ms),
                             bucket_floor(series.timestamps.back(), step_ms));
}

Decomposition decompose(const TimeSeries& series, std::size_t period) {
    series.validate();
    const std::size_t n = series.size();
    if (period < 2) throw ValidationError("decomposition period must be at least 2 samples");
    if (n < 2 * period) throw ValidationError("decomposition needs at least two full periods");
    if (series.defined_count() != n) throw ValidationError("decomposition needs a series without missing values");
    for (std::size_t i = 2; i < n; ++i) {
        if (series.timestamps[i] - series.timestamps[i - 1] != series.timestamps[1] - series.timestamps[0]) {
            throw ValidationError("decomposition needs a regularly spaced series");
        }
    }

    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = *series.values[i];

    Decomposition d;
    d.trend.timestamps = series.timestamps;
    d.trend.values.assign(n, std::nullopt);
    const std::size_t half = period / 2;
    const double p = static_cast<double>(period);
    for (std::size_t i = half; i + half < n; ++i) {
        double sum = 0.0;
        if (period % 2 == 1) {
            for (std::size_t j = i - half; j <= i + half; ++j) sum += x[j];
            d.trend.values[i] = sum / p;
        } else {
            sum = 0.5 * (x[i - half] + x[i + half]);
            for (std::size_t j = i - half + 1; j < i + half; ++j) sum += x[j];
            d.trend.values[i] = sum / p;
        }
    }

    std::vector<double> phase_sum(period, 0.0);
    std::vector<std::size_t> phase_count(period, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!d.trend.values[i]) continue;
        phase_sum[i % period] += x[i] - *d.trend.values[i];
        ++phase_count[i % period];
    }
    std::vector<double> phase_mean(period);
    double grand = 0.0;
    for (std::size_t r = 0; r < period; ++r) {
        phase_mean[r] = phase_sum[r] / static_cast<double>(phase_count[r]);
        grand += phase_mean[r];
    }
    grand /= p;
    for (auto& m : phase_mean) m -= grand;

    d.seasonal.timestamps = series.timestamps;
    d.residual.timestamps = series.timestamps;
    for (std::size_t i = 0; i < n; ++i) {
        d.seasonal.values.push_back(phase_mean[i % period]);
        if (d.trend.values[i]) {
            d.residual.values.push_back(x[i] - *d.trend.values[i] - phase_mean[i % period]);
        } else {
            d.residual.values.push_back(std::nullopt);
        }
    }
    return d;
}

TimeSeries MinMaxScaling::scale(const TimeSeries& s) const {
    TimeSeries out = s;
    for (auto& v : out.values) {
        if (v) v = scale(*v);
    }
    return out;
}

TimeSeries MinMaxScaling::unscale(const TimeSeries& s) const {
    TimeSeries out = s;
    for (auto& v : out.values) {
        if (v) v = unscale(*v);
    }
    return out;
}

MinMaxScaling fit_min_max(const TimeSeries& sample) {
    std::optional<double> lo;
    std::optional<double> hi;
    for (const auto& v : sample.values) {
        if (!v) continue;
        lo = lo ? std::min(*lo, *v) : *v;
        hi = hi ? std::max(*hi, *v) : *v;
    }
    if (!lo) throw ValidationError("cannot fit scaling on a sample with no defined values");
    const double range = *hi - *lo;
    return {*lo, range > 0.0 ? range : 1.0};
}

SplitResult split_and_normalize(const TimeSeries& series, const PipelineConfig& config) {
    config.validate();
    series.validate();
    const std::size_t n = series.size();
    if (n < 3) throw ValidationError("splitting needs at least 3 points");
    auto cut = static_cast<std::size_t>(std::floor(static_cast<double>(n) * config.split_fraction));
    cut = std::clamp<std::size_t>(cut, 1, n - 1);

    SplitResult r;
    r.train.timestamps.assign(series.timestamps.begin(), series.timestamps.begin() + static_cast<std::ptrdiff_t>(cut));
    r.train.values.assign(series.values.begin(), series.values.begin() + static_cast<std::ptrdiff_t>(cut));
    r.test.timestamps.assign(series.timestamps.begin() + static_cast<std::ptrdiff_t>(cut), series.timestamps.end());
    r.test.values.assign(series.values.begin() + static_cast<std::ptrdiff_t>(cut), series.values.end());
    if (config.normalize) {
        r.scaling = fit_min_max(r.train);
        r.train = r.scaling.scale(r.train);
        r.test = r.scaling.scale(r.test);
    }
    return r;
}

TimeSeries clean(const TimeSeries& series, const PipelineConfig& config) {
    config.validate();
    TimeSeries s = config.resample_step_ms ? resample(series, *config.resample_step_ms, config.resample_agg) : series;
    s = impute(s, config.impute_method);
    const double threshold =
        config.outlier_method == OutlierMethod::zscore ? config.zscore_threshold : config.iqr_multiplier;
    const std::size_t needed = config.outlier_method == OutlierMethod::zscore ? 2 : 4;
    if (s.defined_count() < needed) return s;
    const auto flags = detect_outliers(s, config.outlier_method, threshold);
    const auto flagged = static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
    if (flagged == 0 || flagged == s.defined_count()) return s;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (flags[i]) s.values[i] = std::nullopt;
    }
    return impute(s, config.impute_method);
}

} // namespace watt::forecast
