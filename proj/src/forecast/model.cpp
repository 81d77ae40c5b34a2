#include "watt/forecast/model.hpp"

#include "watt/common/errors.hpp"
#include "watt/common/time_format.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace watt::forecast {

TrendType parse_trend_type(std::string_view name) {
    if (name == "linear") return TrendType::linear;
    if (name == "logistic") return TrendType::logistic;
    throw ConfigError("unknown trend type '" + std::string(name) + "'");
}

std::string to_string(TrendType t) { return t == TrendType::logistic ? "logistic" : "linear"; }

SeasonalityMode parse_seasonality_mode(std::string_view name) {
    if (name == "additive") return SeasonalityMode::additive;
    if (name == "multiplicative") return SeasonalityMode::multiplicative;
    throw ConfigError("unknown seasonality mode '" + std::string(name) + "'");
}

std::string to_string(SeasonalityMode m) { return m == SeasonalityMode::multiplicative ? "multiplicative" : "additive"; }

std::vector<Seasonality> default_seasonalities() {
    return {{"yearly", 365.25, 10}, {"weekly", 7.0, 3}, {"daily", 1.0, 4}};
}

void ModelConfig::validate() const {
    if (trend == TrendType::logistic && !capacity) throw ConfigError("logistic trend needs a capacity");
    if (capacity && !(*capacity > 0.0)) throw ConfigError("capacity must be > 0");
    if (n_changepoints < 0) throw ConfigError("n_changepoints must be >= 0");
    if (!(changepoint_range > 0.0 && changepoint_range <= 1.0)) throw ConfigError("changepoint_range must be in (0, 1]");
    if (!(changepoint_prior_scale > 0.0)) throw ConfigError("changepoint_prior_scale must be > 0");
    if (!(seasonality_prior_scale > 0.0)) throw ConfigError("seasonality_prior_scale must be > 0");
    if (!(holidays_prior_scale > 0.0)) throw ConfigError("holidays_prior_scale must be > 0");
    std::set<std::string> names;
    for (const auto& s : seasonalities) {
        if (!(s.period_days > 0.0)) throw ConfigError("seasonality '" + s.name + "' needs a period > 0");
        if (s.fourier_order < 1) throw ConfigError("seasonality '" + s.name + "' needs fourier_order >= 1");
        if (!names.insert("s:" + s.name).second) throw ConfigError("duplicate seasonality '" + s.name + "'");
    }
    for (const auto& h : holidays) {
        if (h.lower_window > 0 || h.upper_window < 0) {
            throw ConfigError("holiday '" + h.name + "' needs lower_window <= 0 <= upper_window");
        }
        if (!names.insert("h:" + h.name).second) throw ConfigError("duplicate holiday '" + h.name + "'");
    }
    for (const auto& r : regressors) {
        if (!names.insert("r:" + r).second) throw ConfigError("duplicate regressor '" + r + "'");
    }
}

std::vector<Seasonality> auto_seasonalities(const std::vector<Seasonality>& candidates, std::int64_t span_ms,
                                            std::int64_t sample_interval_ms) {
    std::vector<Seasonality> out;
    for (const auto& s : candidates) {
        const double period_ms = s.period_days * static_cast<double>(kMillisPerDay);
        if (static_cast<double>(span_ms) >= 2.0 * period_ms &&
            period_ms >= 2.0 * static_cast<double>(sample_interval_ms)) {
            out.push_back(s);
        }
    }
    return out;
}

void ForecastModel::validate() const {
    config.validate();
    if (deltas.size() != changepoints.size()) throw ValidationError("model needs one delta per changepoint");
    if (seasonal_coeffs.size() != config.seasonalities.size()) {
        throw ValidationError("model needs coefficients for every seasonality");
    }
    for (std::size_t i = 0; i < seasonal_coeffs.size(); ++i) {
        if (seasonal_coeffs[i].size() != 2 * static_cast<std::size_t>(config.seasonalities[i].fourier_order)) {
            throw ValidationError("seasonality '" + config.seasonalities[i].name + "' has the wrong coefficient count");
        }
    }
    if (holiday_effects.size() != config.holidays.size()) throw ValidationError("model needs one effect per holiday");
    if (regressor_coeffs.size() != config.regressors.size() || regressor_stats.size() != config.regressors.size()) {
        throw ValidationError("model needs a coefficient per regressor");
    }
    if (!(scaling.t_scale_ms > 0.0) || !(scaling.y_scale > 0.0)) throw ValidationError("model scaling must be > 0");
}

// ---- json ----

namespace {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("model field '") + key + "' has the wrong type");
    }
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed, const char* what) {
    if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!allowed.contains(key)) throw ConfigError(std::string(what) + ": unknown key '" + key + "'");
    }
}

} // namespace

nlohmann::ordered_json to_json(const ModelConfig& c) {
    nlohmann::ordered_json j;
    j["trend"] = to_string(c.trend);
    j["capacity"] = c.capacity ? nlohmann::ordered_json(*c.capacity) : nullptr;
    j["n_changepoints"] = c.n_changepoints;
    j["changepoint_range"] = c.changepoint_range;
    j["changepoint_prior_scale"] = c.changepoint_prior_scale;
    j["seasonalities"] = nlohmann::ordered_json::array();
    for (const auto& s : c.seasonalities) {
        j["seasonalities"].push_back({{"name", s.name}, {"period_days", s.period_days}, {"fourier_order", s.fourier_order}});
    }
    j["seasonality_prior_scale"] = c.seasonality_prior_scale;
    j["seasonality_mode"] = to_string(c.seasonality_mode);
    j["holidays"] = nlohmann::ordered_json::array();
    for (const auto& h : c.holidays) {
        nlohmann::ordered_json dates = nlohmann::ordered_json::array();
        for (auto d : h.dates_ms) dates.push_back(format_iso8601(d));
        j["holidays"].push_back(
            {{"name", h.name}, {"dates", dates}, {"lower_window", h.lower_window}, {"upper_window", h.upper_window}});
    }
    j["holidays_prior_scale"] = c.holidays_prior_scale;
    j["regressors"] = c.regressors;
    return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    reject_unknown(j,
                   {"trend", "capacity", "n_changepoints", "changepoint_range", "changepoint_prior_scale",
                    "seasonalities", "seasonality_prior_scale", "seasonality_mode", "holidays",
                    "holidays_prior_scale", "regressors"},
                   "model config");
    ModelConfig c;
    c.trend = parse_trend_type(get_or<std::string>(j, "trend", "linear"));
    if (j.contains("capacity") && !j["capacity"].is_null()) c.capacity = get_or<double>(j, "capacity", 0.0);
    c.n_changepoints = get_or<int>(j, "n_changepoints", c.n_changepoints);
    c.changepoint_range = get_or<double>(j, "changepoint_range", c.changepoint_range);
    c.changepoint_prior_scale = get_or<double>(j, "changepoint_prior_scale", c.changepoint_prior_scale);
    if (j.contains("seasonalities")) {
        c.seasonalities.clear();
        for (const auto& s : j["seasonalities"]) {
            reject_unknown(s, {"name", "period_days", "fourier_order"}, "seasonality");
            c.seasonalities.push_back({get_or<std::string>(s, "name", ""), get_or<double>(s, "period_days", 0.0),
                                       get_or<int>(s, "fourier_order", 0)});
        }
    }
    c.seasonality_prior_scale = get_or<double>(j, "seasonality_prior_scale", c.seasonality_prior_scale);
    c.seasonality_mode = parse_seasonality_mode(get_or<std::string>(j, "seasonality_mode", "additive"));
    if (j.contains("holidays")) {
        for (const auto& h : j["holidays"]) {
            reject_unknown(h, {"name", "dates", "lower_window", "upper_window"}, "holiday");
            Holiday hol{get_or<std::string>(h, "name", ""), {}, get_or<int>(h, "lower_window", 0),
                        get_or<int>(h, "upper_window", 0)};
            for (const auto& d : get_or<nlohmann::json>(h, "dates", nlohmann::json::array())) {
                try {
                    hol.dates_ms.push_back(d.is_string() ? parse_iso8601(d.get<std::string>()) : d.get<std::int64_t>());
                } catch (const nlohmann::json::exception&) {
                    throw ConfigError("holiday dates must be ISO-8601 strings or epoch milliseconds");
                } catch (const ValidationError& e) {
                    throw ConfigError(e.what());
                }
            }
            c.holidays.push_back(std::move(hol));
        }
    }
    c.holidays_prior_scale = get_or<double>(j, "holidays_prior_scale", c.holidays_prior_scale);
    c.regressors = get_or<std::vector<std::string>>(j, "regressors", {});
    c.validate();
    return c;
}

nlohmann::ordered_json to_json(const ForecastModel& m) {
    nlohmann::ordered_json j;
    j["format"] = "watt-forecast-model";
    j["version"] = 1;
    j["config"] = to_json(m.config);
    j["scaling"] = {{"t0_ms", m.scaling.t0_ms}, {"t_scale_ms", m.scaling.t_scale_ms}, {"y_scale", m.scaling.y_scale}};
    j["k"] = m.k;
    j["m"] = m.m;
    j["changepoints"] = m.changepoints;
    j["deltas"] = m.deltas;
    j["seasonal_coeffs"] = m.seasonal_coeffs;
    j["holiday_effects"] = m.holiday_effects;
    j["regressor_coeffs"] = m.regressor_coeffs;
    j["regressor_stats"] = nlohmann::ordered_json::array();
    for (const auto& s : m.regressor_stats) j["regressor_stats"].push_back({{"mean", s.mean}, {"std", s.std}});
    return j;
}

ForecastModel model_from_json(const nlohmann::json& j) {
    try {
        if (j.value("format", "") != "watt-forecast-model") throw CorruptDataError("not a forecast model file");
        ForecastModel m;
        m.config = model_config_from_json(j.at("config"));
        const auto& s = j.at("scaling");
        m.scaling = {s.at("t0_ms").get<std::int64_t>(), s.at("t_scale_ms").get<double>(), s.at("y_scale").get<double>()};
        m.k = j.at("k").get<double>();
        m.m = j.at("m").get<double>();
        m.changepoints = j.at("changepoints").get<std::vector<double>>();
        m.deltas = j.at("deltas").get<std::vector<double>>();
        m.seasonal_coeffs = j.at("seasonal_coeffs").get<std::vector<std::vector<double>>>();
        m.holiday_effects = j.at("holiday_effects").get<std::vector<double>>();
        m.regressor_coeffs = j.at("regressor_coeffs").get<std::vector<double>>();
        for (const auto& r : j.at("regressor_stats")) {
            m.regressor_stats.push_back({r.at("mean").get<double>(), r.at("std").get<double>()});
        }
        m.validate();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptDataError(std::string("forecast model: ") + e.what());
    } catch (const ValidationError& e) {
        throw CorruptDataError(std::string("forecast model: ") + e.what());
    } catch (const ConfigError& e) {
        throw CorruptDataError(std::string("forecast model: ") + e.what());
    }
}

nlohmann::ordered_json to_json(const ForecastRow& row) {
    return {{"ds", format_iso8601(row.ds)}, {"yhat", row.yhat},         {"trend", row.trend},
            {"seasonal", row.seasonal},     {"holiday", row.holiday}, {"regressor", row.regressor}};
}

// ---- building blocks ----

std::vector<double> make_changepoints(double t_first, double t_last, int n, double range_fraction) {
    std::vector<double> out;
    const double span = (t_last - t_first) * range_fraction;
    for (int j = 1; j <= n; ++j) out.push_back(t_first + span * j / (n + 1));
    return out;
}

std::vector<double> fourier_features(double t, double period, int order) {
    if (!(period > 0.0)) throw DomainError("seasonal period must be > 0");
    std::vector<double> row;
    row.reserve(2 * static_cast<std::size_t>(std::max(order, 0)));
    for (int n = 1; n <= order; ++n) {
        const double x = 2.0 * std::numbers::pi * n * t / period;
        row.push_back(std::cos(x));
        row.push_back(std::sin(x));
    }
    return row;
}

std::vector<double> logistic_gamma(double k, double m, const std::vector<double>& changepoints,
                                   const std::vector<double>& deltas) {
    std::vector<double> gamma(changepoints.size());
    double rate = k;
    double offset = m;
    for (std::size_t i = 0; i < changepoints.size(); ++i) {
        const double next = rate + deltas[i];
        gamma[i] = (changepoints[i] - offset) * (1.0 - rate / next);
        offset += gamma[i];
        rate = next;
    }
    return gamma;
}

double eval_trend(TrendType trend, double k, double m, const std::vector<double>& changepoints,
                  const std::vector<double>& deltas, double t, std::optional<double> capacity) {
    if (trend == TrendType::linear) {
        double rate = k;
        double offset = m;
        for (std::size_t j = 0; j < changepoints.size(); ++j) {
            if (changepoints[j] <= t) {
                rate += deltas[j];
                offset -= changepoints[j] * deltas[j];
            }
        }
        return rate * t + offset;
    }
    if (!capacity) throw ConfigError("logistic trend needs a capacity");
    const auto gamma = logistic_gamma(k, m, changepoints, deltas);
    double rate = k;
    double offset = m;
    for (std::size_t j = 0; j < changepoints.size(); ++j) {
        if (changepoints[j] <= t) {
            rate += deltas[j];
            offset += gamma[j];
        }
    }
    return *capacity / (1.0 + std::exp(-rate * (t - offset)));
}

double eval_trend(const ForecastModel& model, double t) {
    std::optional<double> cap;
    if (model.config.capacity) cap = *model.config.capacity / model.scaling.y_scale;
    return eval_trend(model.config.trend, model.k, model.m, model.changepoints, model.deltas, t, cap);
}

std::vector<std::int64_t> future_times(std::int64_t last_ms, std::int64_t step_ms, std::int64_t horizon_ms) {
    if (step_ms <= 0) throw ValidationError("forecast step must be > 0");
    if (horizon_ms < 0) throw ValidationError("forecast horizon must be >= 0");
    std::vector<std::int64_t> out;
    for (std::int64_t t = last_ms + step_ms; t <= last_ms + horizon_ms; t += step_ms) out.push_back(t);
    return out;
}

// ---- features ----

namespace {

struct FeatureLayout {
    std::size_t seasonal_cols = 0;
    std::size_t holiday_cols = 0;
    std::size_t regressor_cols = 0;
    std::size_t total() const { return seasonal_cols + holiday_cols + regressor_cols; }
};

FeatureLayout layout_of(const ModelConfig& c) {
    FeatureLayout l;
    for (const auto& s : c.seasonalities) l.seasonal_cols += 2 * static_cast<std::size_t>(s.fourier_order);
    l.holiday_cols = c.holidays.size();
    l.regressor_cols = c.regressors.size();
    return l;
}

std::int64_t utc_day(std::int64_t t_ms) {
    std::int64_t d = t_ms / kMillisPerDay;
    if (t_ms % kMillisPerDay != 0 && t_ms < 0) --d;
    return d;
}

bool holiday_active(const Holiday& h, std::int64_t t_ms) {
    const auto day = utc_day(t_ms);
    for (auto date : h.dates_ms) {
        const auto d = utc_day(date);
        if (day >= d + h.lower_window && day <= d + h.upper_window) return true;
    }
    return false;
}

const std::vector<double>& regressor_values(const Regressors& regressors, const std::string& name, std::size_t n) {
    const auto it = regressors.find(name);
    if (it == regressors.end()) throw ValidationError("missing values for regressor '" + name + "'");
    if (it->second.size() != n) {
        throw ValidationError("regressor '" + name + "' needs " + std::to_string(n) + " values, got " +
                              std::to_string(it->second.size()));
    }
    for (double v : it->second) {
        if (!std::isfinite(v)) throw ValidationError("regressor '" + name + "' has a non-finite value");
    }
    return it->second;
}

Eigen::MatrixXd build_features(const ModelConfig& c, const std::vector<std::int64_t>& times,
                               const Regressors& regressors, const std::vector<RegressorStats>& stats) {
    const auto layout = layout_of(c);
    const auto n = static_cast<Eigen::Index>(times.size());
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(layout.total()));
    Eigen::Index col = 0;
    for (const auto& s : c.seasonalities) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double days = static_cast<double>(times[static_cast<std::size_t>(i)]) / static_cast<double>(kMillisPerDay);
            const auto row = fourier_features(days, s.period_days, s.fourier_order);
            for (std::size_t f = 0; f < row.size(); ++f) x(i, col + static_cast<Eigen::Index>(f)) = row[f];
        }
        col += 2 * s.fourier_order;
    }
    for (const auto& h : c.holidays) {
        for (Eigen::Index i = 0; i < n; ++i) x(i, col) = holiday_active(h, times[static_cast<std::size_t>(i)]) ? 1.0 : 0.0;
        ++col;
    }
    for (std::size_t r = 0; r < c.regressors.size(); ++r) {
        const auto& values = regressor_values(regressors, c.regressors[r], times.size());
        for (Eigen::Index i = 0; i < n; ++i) {
            x(i, col) = (values[static_cast<std::size_t>(i)] - stats[r].mean) / stats[r].std;
        }
        ++col;
    }
    return x;
}

} // namespace

// ---- objective ----

namespace detail {

namespace {

// Trend values and, when adjoint is given, the gradient of sum(adjoint * g)
// with respect to [k, m, deltas].
Eigen::VectorXd trend_values(const Problem& p, const Eigen::VectorXd& theta, const Eigen::VectorXd* adjoint,
                             Eigen::VectorXd* grad) {
    const auto n = p.t.size();
    const std::size_t s = p.changepoints.size();
    const double k = theta[0];
    const double m = theta[1];
    Eigen::VectorXd g(n);

    if (p.trend == TrendType::linear) {
        for (Eigen::Index i = 0; i < n; ++i) {
            double v = k * p.t[i] + m;
            for (std::size_t j = 0; j < s; ++j) {
                const double h = p.t[i] - p.changepoints[j];
                if (h >= 0.0) v += theta[static_cast<Eigen::Index>(2 + j)] * h;
            }
            g[i] = v;
        }
        if (adjoint) {
            const auto& a = *adjoint;
            (*grad)[0] += a.dot(p.t);
            (*grad)[1] += a.sum();
            for (std::size_t j = 0; j < s; ++j) {
                double acc = 0.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double h = p.t[i] - p.changepoints[j];
                    if (h >= 0.0) acc += a[i] * h;
                }
                (*grad)[static_cast<Eigen::Index>(2 + j)] += acc;
            }
        }
        return g;
    }

    // Logistic: rates K_c and offsets M_c per segment c (c changepoints passed).
    std::vector<double> rate(s + 1);
    std::vector<double> offset(s + 1);
    std::vector<double> gamma(s);
    rate[0] = k;
    offset[0] = m;
    for (std::size_t j = 0; j < s; ++j) {
        rate[j + 1] = rate[j] + theta[static_cast<Eigen::Index>(2 + j)];
        gamma[j] = (p.changepoints[j] - offset[j]) * (1.0 - rate[j] / rate[j + 1]);
        offset[j + 1] = offset[j] + gamma[j];
    }
    std::vector<double> rate_bar(s + 1, 0.0);
    std::vector<double> offset_bar(s + 1, 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        std::size_t c = 0;
        while (c < s && p.changepoints[c] <= p.t[i]) ++c;
        const double z = rate[c] * (p.t[i] - offset[c]);
        const double sig = 1.0 / (1.0 + std::exp(-z));
        g[i] = p.capacity * sig;
        if (adjoint) {
            const double dz = (*adjoint)[i] * p.capacity * sig * (1.0 - sig);
            rate_bar[c] += dz * (p.t[i] - offset[c]);
            offset_bar[c] -= dz * rate[c];
        }
    }
    if (adjoint) {
        for (std::size_t j = s; j-- > 0;) {
            const double gamma_bar = offset_bar[j + 1];
            const double lead = p.changepoints[j] - offset[j];
            offset_bar[j] += offset_bar[j + 1] - gamma_bar * (1.0 - rate[j] / rate[j + 1]);
            rate_bar[j] -= gamma_bar * lead / rate[j + 1];
            rate_bar[j + 1] += gamma_bar * lead * rate[j] / (rate[j + 1] * rate[j + 1]);
            (*grad)[static_cast<Eigen::Index>(2 + j)] += rate_bar[j + 1];
            rate_bar[j] += rate_bar[j + 1];
        }
        (*grad)[0] += rate_bar[0];
        (*grad)[1] += offset_bar[0];
    }
    return g;
}

} // namespace

Eigen::VectorXd Problem::predict(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd g = trend_values(*this, theta, nullptr, nullptr);
    const Eigen::VectorXd f = x * theta.tail(x.cols());
    if (mode == SeasonalityMode::additive) return g + f;
    return g.array() * (1.0 + f.array());
}

double Problem::smooth(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) const {
    const Eigen::VectorXd beta = theta.tail(x.cols());
    const Eigen::VectorXd f = x * beta;
    Eigen::VectorXd g = trend_values(*this, theta, nullptr, nullptr);
    const Eigen::VectorXd yhat = mode == SeasonalityMode::additive ? Eigen::VectorXd(g + f)
                                                                   : Eigen::VectorXd(g.array() * (1.0 + f.array()));
    const Eigen::VectorXd r = yhat - y;
    const double value = 0.5 * r.squaredNorm() + (x_prior_weight.array() * beta.array().square()).sum();
    if (grad) {
        grad->setZero(static_cast<Eigen::Index>(n_params()));
        Eigen::VectorXd trend_adjoint;
        if (mode == SeasonalityMode::additive) {
            trend_adjoint = r;
            grad->tail(x.cols()) = x.transpose() * r;
        } else {
            trend_adjoint = r.array() * (1.0 + f.array());
            grad->tail(x.cols()) = x.transpose() * Eigen::VectorXd(r.array() * g.array());
        }
        grad->tail(x.cols()) += 2.0 * Eigen::VectorXd(x_prior_weight.array() * beta.array());
        trend_values(*this, theta, &trend_adjoint, grad);
    }
    return value;
}

double Problem::l1(const Eigen::VectorXd& theta) const {
    return l1_weight * theta.segment(static_cast<Eigen::Index>(delta_offset()),
                                     static_cast<Eigen::Index>(changepoints.size()))
                           .lpNorm<1>();
}

SolveResult solve(const Problem& problem, Eigen::VectorXd theta) {
    constexpr int kMaxIterations = 10000;
    constexpr double kTolerance = 1e-10;
    const auto np = static_cast<Eigen::Index>(problem.n_params());
    const auto d0 = static_cast<Eigen::Index>(problem.delta_offset());
    const auto nd = static_cast<Eigen::Index>(problem.changepoints.size());

    // Linear additive models are quadratic: work on the Gram matrix with a
    // fixed step from its largest eigenvalue.
    const bool quadratic = problem.trend == TrendType::linear && problem.mode == SeasonalityMode::additive;
    Eigen::MatrixXd gram;
    Eigen::VectorXd rhs;
    double y_sq = 0.0;
    double lipschitz = 1.0;
    if (quadratic) {
        const auto n = problem.t.size();
        Eigen::MatrixXd a(n, np);
        a.col(0) = problem.t;
        a.col(1).setOnes();
        for (Eigen::Index j = 0; j < nd; ++j) {
            a.col(d0 + j) = (problem.t.array() - problem.changepoints[static_cast<std::size_t>(j)]).max(0.0);
        }
        a.rightCols(problem.x.cols()) = problem.x;
        gram = a.transpose() * a;
        gram.diagonal().tail(problem.x.cols()) += 2.0 * problem.x_prior_weight;
        rhs = a.transpose() * problem.y;
        y_sq = problem.y.squaredNorm();
        lipschitz = std::max(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram, Eigen::EigenvaluesOnly)
                                 .eigenvalues()
                                 .maxCoeff(),
                             1e-12);
    }
    const auto smooth = [&](const Eigen::VectorXd& th, Eigen::VectorXd* grad) {
        if (!quadratic) return problem.smooth(th, grad);
        const Eigen::VectorXd gt = gram * th;
        if (grad) *grad = gt - rhs;
        return 0.5 * th.dot(gt) - rhs.dot(th) + 0.5 * y_sq;
    };
    const auto prox = [&](Eigen::VectorXd v, double step) {
        const double thr = problem.l1_weight * step;
        for (Eigen::Index j = d0; j < d0 + nd; ++j) {
            const double a = std::abs(v[j]) - thr;
            v[j] = a > 0.0 ? std::copysign(a, v[j]) : 0.0;
        }
        return v;
    };

    // Exact optimum for the quadratic case: fix the sign pattern of the
    // non-zero deltas, solve the reduced linear system and accept it only if
    // the optimality conditions hold.
    const auto polish = [&](const Eigen::VectorXd& current) -> std::optional<Eigen::VectorXd> {
        std::vector<Eigen::Index> active;
        for (Eigen::Index j = 0; j < np; ++j) {
            if (j < d0 || j >= d0 + nd || current[j] != 0.0) active.push_back(j);
        }
        const auto na = static_cast<Eigen::Index>(active.size());
        Eigen::MatrixXd g(na, na);
        Eigen::VectorXd r(na);
        for (Eigen::Index a = 0; a < na; ++a) {
            const auto ja = active[static_cast<std::size_t>(a)];
            for (Eigen::Index b = 0; b < na; ++b) g(a, b) = gram(ja, active[static_cast<std::size_t>(b)]);
            r[a] = rhs[ja];
            if (ja >= d0 && ja < d0 + nd) r[a] -= problem.l1_weight * (current[ja] > 0.0 ? 1.0 : -1.0);
        }
        const Eigen::VectorXd sol = g.ldlt().solve(r);
        if (!sol.allFinite()) return std::nullopt;
        Eigen::VectorXd out = Eigen::VectorXd::Zero(np);
        for (Eigen::Index a = 0; a < na; ++a) {
            const auto ja = active[static_cast<std::size_t>(a)];
            if (ja >= d0 && ja < d0 + nd && (sol[a] > 0.0) != (current[ja] > 0.0)) return std::nullopt;
            out[ja] = sol[a];
        }
        const Eigen::VectorXd grad_out = gram * out - rhs;
        const double slack = 1e-9 * std::max(1.0, problem.l1_weight);
        for (Eigen::Index j = 0; j < np; ++j) {
            const bool penalized = j >= d0 && j < d0 + nd;
            const double residual = !penalized  ? grad_out[j]
                                    : out[j] != 0.0 ? grad_out[j] + problem.l1_weight * (out[j] > 0.0 ? 1.0 : -1.0)
                                                    : std::max(0.0, std::abs(grad_out[j]) - problem.l1_weight);
            if (std::abs(residual) > slack * std::max(1.0, rhs.lpNorm<Eigen::Infinity>())) return std::nullopt;
        }
        return out;
    };

    SolveResult result;
    theta = prox(theta, 0.0);
    double objective = smooth(theta, nullptr) + problem.l1(theta);
    Eigen::VectorXd previous = theta;
    double momentum = 1.0;
    int quiet_steps = 0;
    Eigen::VectorXd grad(np);
    for (int it = 1; it <= kMaxIterations; ++it) {
        result.iterations = it;
        const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        const Eigen::VectorXd point = theta + ((momentum - 1.0) / next_momentum) * (theta - previous);
        const double f_point = smooth(point, &grad);
        Eigen::VectorXd candidate;
        double f_candidate = 0.0;
        while (true) {
            candidate = prox(point - grad / lipschitz, 1.0 / lipschitz);
            f_candidate = smooth(candidate, nullptr);
            if (quadratic) break;
            const Eigen::VectorXd step = candidate - point;
            const double bound = f_point + grad.dot(step) + 0.5 * lipschitz * step.squaredNorm();
            if (std::isfinite(f_candidate) && f_candidate <= bound + 1e-12 * std::abs(bound)) break;
            lipschitz *= 2.0;
            if (lipschitz > 1e300) throw DomainError("forecast fit diverged");
        }
        const double candidate_objective = f_candidate + problem.l1(candidate);
        if (candidate_objective > objective && momentum > 1.0) {
            // Momentum overshot: restart from the current iterate.
            momentum = 1.0;
            previous = theta;
            quiet_steps = 0;
            continue;
        }
        previous = theta;
        theta = candidate;
        momentum = next_momentum;
        const double change = std::abs(objective - candidate_objective);
        objective = candidate_objective;

        if (quadratic && it % 25 == 0) {
            if (auto exact = polish(theta)) {
                theta = *exact;
                result.converged = true;
                break;
            }
        }
        quiet_steps = change <= kTolerance * std::max(std::abs(objective), 1e-12) ? quiet_steps + 1 : 0;
        if (quiet_steps >= 5) {
            if (quadratic) {
                if (auto exact = polish(theta)) theta = *exact;
            }
            result.converged = true;
            break;
        }
    }
    result.theta = theta;
    return result;
}

} // namespace detail

// ---- fit / predict ----

namespace {

std::vector<double> scaled_series(const TimeSeries& s, std::vector<std::int64_t>& times) {
    std::vector<double> y;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!s.values[i]) throw ValidationError("training series has missing values; impute first");
        if (!std::isfinite(*s.values[i])) throw ValidationError("training series has a non-finite value");
        times.push_back(s.timestamps[i]);
        y.push_back(*s.values[i]);
    }
    return y;
}

Eigen::VectorXd prior_weights(const ModelConfig& c) {
    const auto layout = layout_of(c);
    Eigen::VectorXd w(static_cast<Eigen::Index>(layout.total()));
    Eigen::Index col = 0;
    const auto fill = [&](std::size_t count, double scale) {
        for (std::size_t i = 0; i < count; ++i) w[col++] = 1.0 / (2.0 * scale * scale);
    };
    fill(layout.seasonal_cols, c.seasonality_prior_scale);
    fill(layout.holiday_cols, c.holidays_prior_scale);
    fill(layout.regressor_cols, c.holidays_prior_scale);
    return w;
}

} // namespace

FitResult fit(const ModelConfig& config, const TimeSeries& train, const Regressors& regressors) {
    config.validate();
    train.validate();
    if (train.size() < 2) throw ValidationError("fitting needs at least 2 points");
    std::vector<std::int64_t> times;
    const auto y = scaled_series(train, times);
    if (times.back() == times.front()) throw ValidationError("fitting needs more than one distinct time");

    ForecastModel model;
    model.config = config;
    model.scaling.t0_ms = times.front();
    model.scaling.t_scale_ms = static_cast<double>(times.back() - times.front());
    double y_max = 0.0;
    for (double v : y) y_max = std::max(y_max, std::abs(v));
    model.scaling.y_scale = y_max > 0.0 ? y_max : 1.0;
    if (config.trend == TrendType::logistic) {
        for (double v : y) {
            if (v > *config.capacity) throw ValidationError("observation above the logistic capacity");
        }
    }

    for (const auto& name : config.regressors) {
        const auto& values = regressor_values(regressors, name, times.size());
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / static_cast<double>(values.size()));
        model.regressor_stats.push_back({mean, sd > 0.0 ? sd : 1.0});
    }

    detail::Problem p;
    p.trend = config.trend;
    p.mode = config.seasonality_mode;
    const auto n = static_cast<Eigen::Index>(times.size());
    p.t.resize(n);
    p.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        p.t[i] = model.scaling.scaled_time(times[static_cast<std::size_t>(i)]);
        p.y[i] = y[static_cast<std::size_t>(i)] / model.scaling.y_scale;
    }
    p.x = build_features(config, times, regressors, model.regressor_stats);
    p.x_prior_weight = prior_weights(config);
    p.changepoints = make_changepoints(0.0, 1.0, config.n_changepoints, config.changepoint_range);
    p.l1_weight = 1.0 / config.changepoint_prior_scale;
    if (config.capacity) p.capacity = *config.capacity / model.scaling.y_scale;

    Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.n_params()));
    const double y_first = p.y[0];
    const double y_last = p.y[n - 1];
    if (config.trend == TrendType::linear) {
        theta0[0] = y_last - y_first;
        theta0[1] = y_first;
    } else {
        const double cap = p.capacity;
        const double y0 = std::clamp(y_first, 0.01 * cap, 0.99 * cap);
        const double y1 = std::clamp(y_last, 0.01 * cap, 0.99 * cap);
        double r0 = cap / y0;
        const double r1 = cap / y1;
        if (std::abs(r0 - r1) <= 0.01) r0 *= 1.05;
        const double l0 = std::log(r0 - 1.0);
        const double l1 = std::log(r1 - 1.0);
        theta0[1] = l0 / (l0 - l1);
        theta0[0] = l0 - l1;
    }

    const auto solved = detail::solve(p, theta0);
    const auto& th = solved.theta;
    model.k = th[0];
    model.m = th[1];
    model.changepoints = p.changepoints;
    for (std::size_t j = 0; j < p.changepoints.size(); ++j) model.deltas.push_back(th[static_cast<Eigen::Index>(2 + j)]);
    auto col = static_cast<Eigen::Index>(p.beta_offset());
    for (const auto& s : config.seasonalities) {
        std::vector<double> coeffs;
        for (int f = 0; f < 2 * s.fourier_order; ++f) coeffs.push_back(th[col++]);
        model.seasonal_coeffs.push_back(std::move(coeffs));
    }
    for (std::size_t h = 0; h < config.holidays.size(); ++h) model.holiday_effects.push_back(th[col++]);
    for (std::size_t r = 0; r < config.regressors.size(); ++r) model.regressor_coeffs.push_back(th[col++]);

    FitResult result;
    result.iterations = solved.iterations;
    result.converged = solved.converged;
    const auto rows = predict(model, times, regressors);
    double ss = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double r = y[i] - rows[i].yhat;
        result.residuals.push_back(r);
        ss += r * r;
    }
    result.in_sample_rmse = std::sqrt(ss / static_cast<double>(rows.size()));
    result.model = std::move(model);
    return result;
}

std::vector<ForecastRow> predict(const ForecastModel& model, const std::vector<std::int64_t>& times,
                                 const Regressors& regressors) {
    model.validate();
    const auto& c = model.config;
    const auto x = build_features(c, times, regressors, model.regressor_stats);
    const auto layout = layout_of(c);

    Eigen::VectorXd beta(static_cast<Eigen::Index>(layout.total()));
    Eigen::Index col = 0;
    for (const auto& coeffs : model.seasonal_coeffs) {
        for (double v : coeffs) beta[col++] = v;
    }
    for (double v : model.holiday_effects) beta[col++] = v;
    for (double v : model.regressor_coeffs) beta[col++] = v;

    const auto sc = static_cast<Eigen::Index>(layout.seasonal_cols);
    const auto hc = static_cast<Eigen::Index>(layout.holiday_cols);
    const auto rc = static_cast<Eigen::Index>(layout.regressor_cols);
    const Eigen::VectorXd seasonal = x.leftCols(sc) * beta.head(sc);
    const Eigen::VectorXd holiday = x.middleCols(sc, hc) * beta.segment(sc, hc);
    const Eigen::VectorXd regressor = x.rightCols(rc) * beta.tail(rc);

    const double ys = model.scaling.y_scale;
    std::vector<ForecastRow> rows;
    rows.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double g = eval_trend(model, model.scaling.scaled_time(times[i]));
        ForecastRow row;
        row.ds = times[i];
        row.trend = g * ys;
        const double factor = c.seasonality_mode == SeasonalityMode::multiplicative ? g * ys : ys;
        row.seasonal = seasonal[ii] * factor;
        row.holiday = holiday[ii] * factor;
        row.regressor = regressor[ii] * factor;
        row.yhat = row.trend + row.seasonal + row.holiday + row.regressor;
        rows.push_back(row);
    }
    return rows;
}

} // namespace watt::forecast
