#include "watt/common/time_format.hpp"

#include "watt/common/errors.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

namespace watt {

namespace {

int parse_digits(std::string_view text, std::size_t pos, std::size_t count) {
    if (pos + count > text.size()) throw ValidationError("timestamp too short: " + std::string(text));
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + count, value);
    if (ec != std::errc{} || ptr != text.data() + pos + count) {
        throw ValidationError("invalid timestamp: " + std::string(text));
    }
    return value;
}

void expect(std::string_view text, std::size_t pos, char c) {
    if (pos >= text.size() || text[pos] != c) {
        throw ValidationError("invalid timestamp: " + std::string(text));
    }
}

} // namespace

std::int64_t parse_iso8601(std::string_view text) {
    using namespace std::chrono;
    if (!text.empty() && (text.back() == 'Z' || text.back() == 'z')) text.remove_suffix(1);

    const int y = parse_digits(text, 0, 4);
    expect(text, 4, '-');
    const int mo = parse_digits(text, 5, 2);
    expect(text, 7, '-');
    const int d = parse_digits(text, 8, 2);
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw ValidationError("invalid calendar date: " + std::string(text));

    std::int64_t ms = sys_days{ymd}.time_since_epoch().count() * kMillisPerDay;
    if (text.size() == 10) return ms;

    if (text[10] != 'T' && text[10] != 't' && text[10] != ' ') {
        throw ValidationError("invalid timestamp: " + std::string(text));
    }
    const int hh = parse_digits(text, 11, 2);
    expect(text, 13, ':');
    const int mm = parse_digits(text, 14, 2);
    int ss = 0;
    int frac = 0;
    if (text.size() > 16) {
        expect(text, 16, ':');
        ss = parse_digits(text, 17, 2);
        if (text.size() > 19) {
            expect(text, 19, '.');
            const std::size_t digits = text.size() - 20;
            if (digits == 0 || digits > 3) throw ValidationError("invalid fraction: " + std::string(text));
            frac = parse_digits(text, 20, digits);
            for (std::size_t i = digits; i < 3; ++i) frac *= 10;
        }
    }
    if (hh > 23 || mm > 59 || ss > 59) throw ValidationError("invalid time of day: " + std::string(text));
    return ms + hh * kMillisPerHour + mm * kMillisPerMinute + ss * kMillisPerSecond + frac;
}

std::string format_iso8601(std::int64_t ms) {
    using namespace std::chrono;
    std::int64_t days = ms / kMillisPerDay;
    std::int64_t rem = ms % kMillisPerDay;
    if (rem < 0) {
        rem += kMillisPerDay;
        --days;
    }
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    const auto hh = rem / kMillisPerHour;
    const auto mm = (rem % kMillisPerHour) / kMillisPerMinute;
    const auto ss = (rem % kMillisPerMinute) / kMillisPerSecond;
    const auto frac = rem % kMillisPerSecond;

    char buf[40];
    if (frac == 0) {
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                      static_cast<long long>(hh), static_cast<long long>(mm), static_cast<long long>(ss));
    } else {
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ",
                      static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                      static_cast<unsigned>(ymd.day()), static_cast<long long>(hh),
                      static_cast<long long>(mm), static_cast<long long>(ss), static_cast<long long>(frac));
    }
    return buf;
}

std::int64_t now_millis() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

} // namespace watt
