#pragma once

#include "watt/forecast/model.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace watt::testing {

// A logistic-trend problem with a handful of changepoints and seasonal
// columns, plus a random parameter point whose rates stay well away from 0
// and whose deltas stay away from the L1 kink.
struct LogisticCase {
    forecast::detail::Problem problem;
    Eigen::VectorXd theta;
};

inline LogisticCase random_logistic_case(std::mt19937_64& gen) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    LogisticCase c;
    auto& p = c.problem;
    p.trend = forecast::TrendType::logistic;
    p.mode = unit(gen) < 0.5 ? forecast::SeasonalityMode::additive : forecast::SeasonalityMode::multiplicative;
    const int n = 60;
    p.t.resize(n);
    p.y.resize(n);
    p.x.resize(n, 4);
    for (int i = 0; i < n; ++i) {
        p.t[i] = (i + 0.5 * unit(gen)) / n;
        p.x(i, 0) = std::cos(2 * std::numbers::pi * 7 * p.t[i]);
        p.x(i, 1) = std::sin(2 * std::numbers::pi * 7 * p.t[i]);
        p.x(i, 2) = i % 9 == 0 ? 1.0 : 0.0;
        p.x(i, 3) = unit(gen) - 0.5;
    }
    p.x_prior_weight = Eigen::VectorXd::Constant(4, 1.0 / (2.0 * 10.0 * 10.0));
    p.changepoints = forecast::make_changepoints(0.0, 1.0, 5, 0.8);
    p.l1_weight = 1.0 / 0.05;
    p.capacity = 1.5 + unit(gen);
    for (int i = 0; i < n; ++i) p.y[i] = p.capacity * (0.2 + 0.6 * unit(gen));

    c.theta.resize(static_cast<Eigen::Index>(p.n_params()));
    c.theta[0] = 2.0 + 4.0 * unit(gen);
    c.theta[1] = 0.2 + 0.6 * unit(gen);
    double rate = c.theta[0];
    for (std::size_t j = 0; j < p.changepoints.size(); ++j) {
        double d = (0.1 + 0.9 * unit(gen)) * (unit(gen) < 0.5 ? -1.0 : 1.0);
        if (rate + d < 1.0) d = std::abs(d);
        rate += d;
        c.theta[static_cast<Eigen::Index>(2 + j)] = d;
    }
    for (Eigen::Index j = static_cast<Eigen::Index>(p.beta_offset()); j < c.theta.size(); ++j) {
        c.theta[j] = 0.2 * (unit(gen) - 0.5);
    }
    return c;
}

// Max-norm relative error between the analytic gradient of the full
// objective (smooth part plus the L1 term's slope) and central differences.
inline double logistic_gradient_error(const LogisticCase& c) {
    const auto& p = c.problem;
    Eigen::VectorXd grad;
    p.smooth(c.theta, &grad);
    for (std::size_t j = 0; j < p.changepoints.size(); ++j) {
        const auto idx = static_cast<Eigen::Index>(p.delta_offset() + j);
        grad[idx] += p.l1_weight * (c.theta[idx] > 0 ? 1.0 : -1.0);
    }
    Eigen::VectorXd numeric(grad.size());
    for (Eigen::Index i = 0; i < grad.size(); ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(c.theta[i]));
        Eigen::VectorXd up = c.theta;
        Eigen::VectorXd down = c.theta;
        up[i] += h;
        down[i] -= h;
        numeric[i] = (p.objective(up) - p.objective(down)) / (2.0 * h);
    }
    return (grad - numeric).lpNorm<Eigen::Infinity>() / numeric.lpNorm<Eigen::Infinity>();
}

// Hourly synthetic consumption: a linear trend plus a daily sinusoid plus
// optional Gaussian noise.
struct SyntheticSeries {
    TimeSeries series;
    std::vector<double> seasonal_truth;
};

inline SyntheticSeries synthetic_hourly(int days, double noise_sd, std::uint64_t seed, std::int64_t start_ms) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> noise(0.0, noise_sd);
    SyntheticSeries s;
    for (int h = 0; h < days * 24; ++h) {
        const double day = h / 24.0;
        const double seasonal = 0.2 * std::sin(2 * std::numbers::pi * (h % 24) / 24.0);
        const double y = 0.5 + 0.01 * day + seasonal + (noise_sd > 0 ? noise(gen) : 0.0);
        s.series.push_back(start_ms + static_cast<std::int64_t>(h) * 3'600'000, y);
        s.seasonal_truth.push_back(seasonal);
    }
    return s;
}

} // namespace watt::testing
