#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace buypred {

// Milliseconds since the Unix epoch, UTC. All calendar math in this project
// is done in UTC; the input data carries "Z"-suffixed instants.
using Millis = std::int64_t;

// Strict parser for `YYYY-MM-DDThh:mm:ss.SSSZ` (exactly 24 chars, real
// calendar date). Returns nullopt for anything else.
std::optional<Millis> parse_iso8601_ms(std::string_view text);

// Inverse of parse_iso8601_ms; format_iso8601_ms(parse_iso8601_ms(s)) == s.
std::string format_iso8601_ms(Millis t);

int utc_hour(Millis t);     // 0..23
int utc_weekday(Millis t);  // 0 = Sunday .. 6 = Saturday

constexpr int kSunday = 0;
constexpr int kTuesday = 2;

// Days between 1970-01-01 and the given civil date (proleptic Gregorian).
std::int64_t days_from_civil(int year, unsigned month, unsigned day);

}  // namespace buypred
