#include <doctest.h>

#include <cstdint>
#include <string>

#include "buypred/rng.hpp"
#include "buypred/timestamp.hpp"

using namespace buypred;

namespace {

// Independent calendar oracle: counts days one year/month at a time.
bool oracle_is_leap(int y) {
  return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0);
}

std::int64_t oracle_epoch_ms(int year, int month, int day, int hour,
                             int minute, int second, int ms) {
  static const int kMonthDays[12] = {31, 28, 31, 30, 31, 30,
                                     31, 31, 30, 31, 30, 31};
  std::int64_t days = 0;
  for (int y = 1970; y < year; ++y) days += oracle_is_leap(y) ? 366 : 365;
  for (int m = 1; m < month; ++m) {
    days += kMonthDays[m - 1];
    if (m == 2 && oracle_is_leap(year)) days += 1;
  }
  days += day - 1;
  return ((days * 24 + hour) * 60 + minute) * 60000 + second * 1000 + ms;
}

}  // namespace

TEST_CASE("parse matches the naive calendar oracle") {
  struct Case {
    const char* text;
    int y, mo, d, h, mi, s, ms;
  };
  const Case cases[] = {
      {"2014-04-07T10:51:09.277Z", 2014, 4, 7, 10, 51, 9, 277},
      {"2014-04-06T18:44:58.314Z", 2014, 4, 6, 18, 44, 58, 314},
      {"2014-06-01T10:00:00.000Z", 2014, 6, 1, 10, 0, 0, 0},
      {"1970-01-01T00:00:00.000Z", 1970, 1, 1, 0, 0, 0, 0},
      {"2000-02-29T23:59:59.999Z", 2000, 2, 29, 23, 59, 59, 999},
      {"2016-12-31T00:00:00.001Z", 2016, 12, 31, 0, 0, 0, 1},
  };
  for (const Case& c : cases) {
    auto parsed = parse_iso8601_ms(c.text);
    REQUIRE(parsed.has_value());
    CHECK(*parsed == oracle_epoch_ms(c.y, c.mo, c.d, c.h, c.mi, c.s, c.ms));
  }
}

TEST_CASE("known epoch anchor") {
  CHECK(*parse_iso8601_ms("2014-04-07T10:51:09.277Z") == 1396867869277LL);
}

TEST_CASE("rejects malformed timestamps") {
  const char* bad[] = {
      "2014-04-07T10:51:09.27Z",    // 2-digit ms
      "2014-04-07T10:51:09Z",       // no ms
      "2014-04-07 10:51:09.277Z",   // space separator
      "2014-04-07T10:51:09.277",    // missing Z
      "2014-13-07T10:51:09.277Z",   // month 13
      "2014-02-30T10:51:09.277Z",   // Feb 30
      "2015-02-29T10:51:09.277Z",   // not a leap year
      "2014-04-07T24:00:00.000Z",   // hour 24
      "2014-04-07T10:61:09.277Z",   // minute 61
      "2014-04-07t10:51:09.277Z",   // lowercase t
      "2014-4-07T10:51:09.277Z",    // short month
      "",
  };
  for (const char* text : bad) CHECK_FALSE(parse_iso8601_ms(text).has_value());
}

TEST_CASE("format/parse round-trips on random instants") {
  Rng rng(42);
  for (int i = 0; i < 2000; ++i) {
    // Roughly 1990..2116; keeps the formatter in 4-digit-year territory.
    const Millis t = static_cast<Millis>(rng.below(4'000'000'000'000ULL)) +
                     631'152'000'000LL;
    const std::string text = format_iso8601_ms(t);
    auto parsed = parse_iso8601_ms(text);
    REQUIRE(parsed.has_value());
    CHECK(*parsed == t);
    CHECK(format_iso8601_ms(*parsed) == text);
  }
}

TEST_CASE("weekday and hour in UTC") {
  CHECK(utc_weekday(0) == 4);  // 1970-01-01 was a Thursday
  CHECK(utc_weekday(*parse_iso8601_ms("2014-06-01T10:00:00.000Z")) == kSunday);
  CHECK(utc_weekday(*parse_iso8601_ms("2014-04-06T00:00:00.000Z")) == kSunday);
  CHECK(utc_weekday(*parse_iso8601_ms("2014-04-01T12:00:00.000Z")) == kTuesday);
  CHECK(utc_weekday(*parse_iso8601_ms("2014-04-07T23:59:59.999Z")) == 1);
  CHECK(utc_weekday(*parse_iso8601_ms("2000-02-29T00:00:00.000Z")) == kTuesday);

  CHECK(utc_hour(*parse_iso8601_ms("2014-06-01T10:00:00.000Z")) == 10);
  CHECK(utc_hour(*parse_iso8601_ms("2014-06-01T00:00:00.000Z")) == 0);
  CHECK(utc_hour(*parse_iso8601_ms("2014-06-01T23:59:59.999Z")) == 23);
}
