#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace watt {

inline constexpr std::int64_t kMillisPerSecond = 1000;
inline constexpr std::int64_t kMillisPerMinute = 60 * kMillisPerSecond;
inline constexpr std::int64_t kMillisPerHour = 60 * kMillisPerMinute;
inline constexpr std::int64_t kMillisPerDay = 24 * kMillisPerHour;

// Parses "YYYY-MM-DD", "YYYY-MM-DDTHH:MM[:SS[.fff]]" (space also accepted as
// the separator) with an optional trailing "Z". Times are UTC.
std::int64_t parse_iso8601(std::string_view text);

// Formats as "YYYY-MM-DDTHH:MM:SSZ", adding ".fff" only when the
// millisecond part is non-zero.
std::string format_iso8601(std::int64_t ms);

// Wall-clock milliseconds since the epoch.
std::int64_t now_millis();

// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

} // namespace watt
