#include "watt/forecast/csv.hpp"

#include "watt/common/errors.hpp"
#include "watt/common/io.hpp"
#include "watt/common/time_format.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace watt::forecast {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_row(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

std::vector<std::string_view> data_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const auto line = trim(text.substr(start, end - start));
        if (!line.empty() && line.front() != '#') lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

std::string where(std::size_t row) { return "csv row " + std::to_string(row + 1) + ": "; }

double parse_number(std::string_view cell, std::size_t row) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw ValidationError(where(row) + "'" + std::string(cell) + "' is not a number");
    }
    return v;
}

int parse_int(std::string_view cell, std::size_t row) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw ValidationError(where(row) + "'" + std::string(cell) + "' is not an integer");
    }
    return v;
}

std::int64_t parse_time(std::string_view cell, std::size_t row) {
    const bool numeric = !cell.empty() && std::all_of(cell.begin(), cell.end(), [](char c) {
        return (c >= '0' && c <= '9') || c == '-';
    }) && cell.find('-', 1) == std::string_view::npos;
    if (numeric) {
        std::int64_t v = 0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec == std::errc() && ptr == cell.data() + cell.size()) return v;
    }
    try {
        return parse_iso8601(cell);
    } catch (const ValidationError& e) {
        throw ValidationError(where(row) + e.what());
    }
}

} // namespace

ForecastData parse_forecast_csv(std::string_view text) {
    const auto lines = data_lines(text);
    if (lines.empty()) throw ValidationError("csv is empty");
    const auto header = split_row(lines[0]);
    if (header.size() < 2 || header[0] != "ds" || header[1] != "y") {
        throw ValidationError("csv header must start with ds,y");
    }
    ForecastData data;
    std::vector<std::vector<double>*> columns;
    for (std::size_t c = 2; c < header.size(); ++c) {
        const std::string name(header[c]);
        if (name.empty() || data.regressors.contains(name)) throw ValidationError("csv has a blank or repeated column");
        columns.push_back(&data.regressors[name]);
    }
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto cells = split_row(lines[r]);
        if (cells.size() != header.size()) throw ValidationError(where(r) + "wrong number of columns");
        const auto t = parse_time(cells[0], r);
        std::optional<double> y;
        if (!cells[1].empty() && cells[1] != "NA" && cells[1] != "nan") y = parse_number(cells[1], r);
        data.y.push_back(t, y);
        for (std::size_t c = 2; c < cells.size(); ++c) columns[c - 2]->push_back(parse_number(cells[c], r));
    }
    data.y.validate();
    return data;
}

ForecastData read_forecast_csv(const std::filesystem::path& path) { return parse_forecast_csv(read_file(path)); }

std::vector<Holiday> parse_holidays_csv(std::string_view text) {
    const auto lines = data_lines(text);
    std::vector<Holiday> out;
    for (std::size_t r = 0; r < lines.size(); ++r) {
        const auto cells = split_row(lines[r]);
        if (r == 0 && !cells.empty() && cells[0] == "holiday") continue;
        if (cells.size() != 4) throw ValidationError(where(r) + "expected holiday,ds,lower_window,upper_window");
        const std::string name(cells[0]);
        auto it = std::find_if(out.begin(), out.end(), [&](const Holiday& h) { return h.name == name; });
        const int lower = parse_int(cells[2], r);
        const int upper = parse_int(cells[3], r);
        if (it == out.end()) {
            out.push_back({name, {}, lower, upper});
            it = out.end() - 1;
        } else if (it->lower_window != lower || it->upper_window != upper) {
            throw ValidationError(where(r) + "holiday '" + name + "' uses different windows on different rows");
        }
        it->dates_ms.push_back(parse_time(cells[1], r));
    }
    return out;
}

std::vector<Holiday> read_holidays_csv(const std::filesystem::path& path) { return parse_holidays_csv(read_file(path)); }

std::string forecast_csv(const std::vector<ForecastRow>& rows) {
    std::ostringstream out;
    out << "ds,yhat,trend,seasonal,holiday,regressor\n";
    for (const auto& r : rows) {
        out << format_iso8601(r.ds) << ',' << format_double(r.yhat) << ',' << format_double(r.trend) << ','
            << format_double(r.seasonal) << ',' << format_double(r.holiday) << ',' << format_double(r.regressor)
            << '\n';
    }
    return out.str();
}

} // namespace watt::forecast
