#include "buypred/timestamp.hpp"

#include <array>
#include <cstdio>

namespace buypred {

namespace {

constexpr std::int64_t kMsPerSecond = 1000;
constexpr std::int64_t kMsPerMinute = 60 * kMsPerSecond;
constexpr std::int64_t kMsPerHour = 60 * kMsPerMinute;
constexpr std::int64_t kMsPerDay = 24 * kMsPerHour;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b) != 0 && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t floor_mod(std::int64_t a, std::int64_t b) {
  return a - floor_div(a, b) * b;
}

bool is_leap(int y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

unsigned days_in_month(int y, unsigned m) {
  static constexpr std::array<unsigned, 12> kDays = {31, 28, 31, 30, 31, 30,
                                                     31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return kDays[m - 1];
}

struct Civil {
  int year;
  unsigned month;
  unsigned day;
};

// Howard Hinnant's civil_from_days.
Civil civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = floor_div(z, 146097);
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {static_cast<int>(y + (m <= 2)), m, d};
}

bool two_digits(std::string_view s, std::size_t pos, unsigned& out) {
  char a = s[pos], b = s[pos + 1];
  if (a < '0' || a > '9' || b < '0' || b > '9') return false;
  out = static_cast<unsigned>(a - '0') * 10 + static_cast<unsigned>(b - '0');
  return true;
}

}  // namespace

std::int64_t days_from_civil(int year, unsigned month, unsigned day) {
  year -= month <= 2;
  const std::int64_t era = floor_div(year, 400);
  const unsigned yoe = static_cast<unsigned>(year - era * 400);
  const unsigned doy =
      (153 * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::optional<Millis> parse_iso8601_ms(std::string_view text) {
  // YYYY-MM-DDThh:mm:ss.SSSZ
  // 0123456789012345678901234
  if (text.size() != 24) return std::nullopt;
  if (text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':' ||
      text[16] != ':' || text[19] != '.' || text[23] != 'Z') {
    return std::nullopt;
  }
  unsigned y_hi, y_lo, month, day, hour, minute, second;
  if (!two_digits(text, 0, y_hi) || !two_digits(text, 2, y_lo) ||
      !two_digits(text, 5, month) || !two_digits(text, 8, day) ||
      !two_digits(text, 11, hour) || !two_digits(text, 14, minute) ||
      !two_digits(text, 17, second)) {
    return std::nullopt;
  }
  unsigned ms = 0;
  for (std::size_t i = 20; i < 23; ++i) {
    char c = text[i];
    if (c < '0' || c > '9') return std::nullopt;
    ms = ms * 10 + static_cast<unsigned>(c - '0');
  }
  const int year = static_cast<int>(y_hi) * 100 + static_cast<int>(y_lo);
  if (month < 1 || month > 12) return std::nullopt;
  if (day < 1 || day > days_in_month(year, month)) return std::nullopt;
  if (hour > 23 || minute > 59 || second > 59) return std::nullopt;
  const std::int64_t days = days_from_civil(year, month, day);
  return days * kMsPerDay + hour * kMsPerHour + minute * kMsPerMinute +
         second * kMsPerSecond + ms;
}

std::string format_iso8601_ms(Millis t) {
  const std::int64_t days = floor_div(t, kMsPerDay);
  std::int64_t rem = floor_mod(t, kMsPerDay);
  const Civil c = civil_from_days(days);
  const unsigned hour = static_cast<unsigned>(rem / kMsPerHour);
  rem %= kMsPerHour;
  const unsigned minute = static_cast<unsigned>(rem / kMsPerMinute);
  rem %= kMsPerMinute;
  const unsigned second = static_cast<unsigned>(rem / kMsPerSecond);
  const unsigned ms = static_cast<unsigned>(rem % kMsPerSecond);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02u:%02u:%02u.%03uZ",
                c.year, c.month, c.day, hour, minute, second, ms);
  return buf;
}

int utc_hour(Millis t) {
  return static_cast<int>(floor_mod(t, kMsPerDay) / kMsPerHour);
}

int utc_weekday(Millis t) {
  // 1970-01-01 (day zero) was a Thursday.
  return static_cast<int>(floor_mod(floor_div(t, kMsPerDay) + 4, 7));
}

}  // namespace buypred
