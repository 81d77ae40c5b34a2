#pragma once

#include "watt/common/time_series.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace watt::forecast {

enum class TrendType { linear, logistic };
enum class SeasonalityMode { additive, multiplicative };

TrendType parse_trend_type(std::string_view name);
std::string to_string(TrendType t);
SeasonalityMode parse_seasonality_mode(std::string_view name);
std::string to_string(SeasonalityMode m);

struct Seasonality {
    std::string name;
    double period_days = 1.0;
    int fourier_order = 1;

    bool operator==(const Seasonality&) const = default;
};

// A named event affecting whole UTC days: each date plus lower_window days
// before (lower_window <= 0) through upper_window days after.
struct Holiday {
    std::string name;
    std::vector<std::int64_t> dates_ms;
    int lower_window = 0;
    int upper_window = 0;

    bool operator==(const Holiday&) const = default;
};

std::vector<Seasonality> default_seasonalities();

struct ModelConfig {
    TrendType trend = TrendType::linear;
    std::optional<double> capacity;
    int n_changepoints = 25;
    double changepoint_range = 0.8;
    double changepoint_prior_scale = 0.05;
    std::vector<Seasonality> seasonalities = default_seasonalities();
    double seasonality_prior_scale = 10.0;
    SeasonalityMode seasonality_mode = SeasonalityMode::additive;
    std::vector<Holiday> holidays;
    double holidays_prior_scale = 10.0;
    std::vector<std::string> regressors;

    // Throws ConfigError.
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

// Keeps the seasonalities whose period fits at least twice into the
// history, and drops those shorter than twice the sampling interval.
std::vector<Seasonality> auto_seasonalities(const std::vector<Seasonality>& candidates, std::int64_t span_ms,
                                            std::int64_t sample_interval_ms);

struct Scaling {
    std::int64_t t0_ms = 0;
    double t_scale_ms = 1.0;
    double y_scale = 1.0;

    double scaled_time(std::int64_t t_ms) const { return static_cast<double>(t_ms - t0_ms) / t_scale_ms; }

    bool operator==(const Scaling&) const = default;
};

struct RegressorStats {
    double mean = 0.0;
    double std = 1.0;

    bool operator==(const RegressorStats&) const = default;
};

// Fitted parameters. Trend parameters, changepoints and coefficients live in
// scaled units (time in [0, 1] over the history, y divided by y_scale).
struct ForecastModel {
    ModelConfig config;
    Scaling scaling;
    double k = 0.0;
    double m = 0.0;
    std::vector<double> changepoints;
    std::vector<double> deltas;
    std::vector<std::vector<double>> seasonal_coeffs; // per seasonality: cos1, sin1, cos2, ...
    std::vector<double> holiday_effects;
    std::vector<double> regressor_coeffs;
    std::vector<RegressorStats> regressor_stats;

    void validate() const;

    bool operator==(const ForecastModel&) const = default;
};

nlohmann::ordered_json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const ForecastModel& m);
ForecastModel model_from_json(const nlohmann::json& j);

// n times evenly spaced strictly inside [t_first, t_first + range * span].
std::vector<double> make_changepoints(double t_first, double t_last, int n, double range_fraction);

// [cos(2 pi t / P), sin(2 pi t / P), ..., cos(2 pi N t / P), sin(2 pi N t / P)].
std::vector<double> fourier_features(double t, double period, int order);

// Trend in scaled units at scaled time t. Logistic needs capacity, given here
// in scaled units.
double eval_trend(TrendType trend, double k, double m, const std::vector<double>& changepoints,
                  const std::vector<double>& deltas, double t, std::optional<double> capacity = std::nullopt);
double eval_trend(const ForecastModel& model, double t);

// Offsets that keep the logistic trend continuous at each changepoint.
std::vector<double> logistic_gamma(double k, double m, const std::vector<double>& changepoints,
                                   const std::vector<double>& deltas);

using Regressors = std::map<std::string, std::vector<double>, std::less<>>;

struct FitResult {
    ForecastModel model;
    std::vector<double> residuals; // y - yhat in data units, one per training point
    double in_sample_rmse = 0.0;   // data units
    int iterations = 0;
    bool converged = false;
};

// Penalized least-squares fit. The training series must be strictly
// increasing with no missing values; every configured regressor needs one
// value per training point.
FitResult fit(const ModelConfig& config, const TimeSeries& train, const Regressors& regressors = {});

struct ForecastRow {
    std::int64_t ds = 0;
    double yhat = 0.0;
    double trend = 0.0;
    double seasonal = 0.0;
    double holiday = 0.0;
    double regressor = 0.0;
};

nlohmann::ordered_json to_json(const ForecastRow& row);

// Components in data units. In multiplicative mode the seasonal, holiday and
// regressor columns are their contribution trend * factor, so the columns
// always add up to yhat.
std::vector<ForecastRow> predict(const ForecastModel& model, const std::vector<std::int64_t>& times,
                                 const Regressors& regressors = {});

// Evenly spaced future timestamps after `last_ms`.
std::vector<std::int64_t> future_times(std::int64_t last_ms, std::int64_t step_ms, std::int64_t horizon_ms);

namespace detail {

// Design and penalty structure shared by fitting and the gradient checks.
struct Problem {
    TrendType trend = TrendType::linear;
    SeasonalityMode mode = SeasonalityMode::additive;
    Eigen::VectorXd t;     // scaled time
    Eigen::VectorXd y;     // scaled observations
    Eigen::MatrixXd x;     // seasonal | holiday | regressor features
    Eigen::VectorXd x_prior_weight; // 1 / (2 sigma^2) per feature column
    std::vector<double> changepoints;
    double l1_weight = 0.0; // on deltas
    double capacity = 0.0;  // scaled, logistic only

    // Parameter layout: [k, m, deltas..., feature coefficients...].
    std::size_t n_params() const { return 2 + changepoints.size() + static_cast<std::size_t>(x.cols()); }
    std::size_t delta_offset() const { return 2; }
    std::size_t beta_offset() const { return 2 + changepoints.size(); }

    // Value of the smooth part (data term plus L2 penalties); fills grad.
    double smooth(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) const;
    double l1(const Eigen::VectorXd& theta) const;
    double objective(const Eigen::VectorXd& theta) const { return smooth(theta, nullptr) + l1(theta); }
    Eigen::VectorXd predict(const Eigen::VectorXd& theta) const;
};

struct SolveResult {
    Eigen::VectorXd theta;
    int iterations = 0;
    bool converged = false;
};

SolveResult solve(const Problem& problem, Eigen::VectorXd theta0);

} // namespace detail

} // namespace watt::forecast
