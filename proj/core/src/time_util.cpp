// Copyright 2026 The Threatscope Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "threatscope/time_util.hpp"

#include <cstdio>

#include "threatscope/error.hpp"

namespace threatscope {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

bool is_leap(int y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

int days_in_month(int y, int m) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return kDays[m - 1];
}

// Returns the numeric value of exactly `n` digits at text[pos], advancing pos.
int take_digits(std::string_view text, std::size_t& pos, int n) {
  int value = 0;
  for (int i = 0; i < n; ++i) {
    if (pos >= text.size() || text[pos] < '0' || text[pos] > '9') {
      throw ParseError("expected digit in timestamp: '" + std::string(text) + "'");
    }
    value = value * 10 + (text[pos] - '0');
    ++pos;
  }
  return value;
}

void expect_char(std::string_view text, std::size_t& pos, char c) {
  if (pos >= text.size() || text[pos] != c) {
    throw ParseError("malformed timestamp: '" + std::string(text) + "'");
  }
  ++pos;
}

}  // namespace

// Howard Hinnant's civil-days algorithm.
std::int64_t days_from_civil(const CivilDate& d) {
  std::int64_t y = d.year;
  const int m = d.month;
  const int day = d.day;
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + day - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t days) {
  days += 719468;
  const std::int64_t era = (days >= 0 ? days : days - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(days - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return CivilDate{static_cast<int>(y + (m <= 2)), static_cast<int>(m),
                   static_cast<int>(d)};
}

bool is_valid_date(const CivilDate& d) {
  return d.month >= 1 && d.month <= 12 && d.day >= 1 &&
         d.day <= days_in_month(d.year, d.month);
}

std::int64_t parse_rfc3339(std::string_view text) {
  std::size_t pos = 0;
  CivilDate date;
  date.year = take_digits(text, pos, 4);
  expect_char(text, pos, '-');
  date.month = take_digits(text, pos, 2);
  expect_char(text, pos, '-');
  date.day = take_digits(text, pos, 2);
  if (!is_valid_date(date)) {
    throw ParseError("invalid calendar date: '" + std::string(text) + "'");
  }
  if (pos >= text.size() || (text[pos] != 'T' && text[pos] != 't' && text[pos] != ' ')) {
    throw ParseError("missing date/time separator: '" + std::string(text) + "'");
  }
  ++pos;
  const int hour = take_digits(text, pos, 2);
  expect_char(text, pos, ':');
  const int minute = take_digits(text, pos, 2);
  expect_char(text, pos, ':');
  const int second = take_digits(text, pos, 2);
  if (hour > 23 || minute > 59 || second > 60) {
    throw ParseError("invalid time of day: '" + std::string(text) + "'");
  }
  // Fractional seconds carry no information at second precision.
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    std::size_t digits = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      ++pos;
      ++digits;
    }
    if (digits == 0) throw ParseError("empty fraction: '" + std::string(text) + "'");
  }
  std::int64_t offset = 0;
  if (pos >= text.size()) {
    throw ParseError("missing UTC offset: '" + std::string(text) + "'");
  }
  if (text[pos] == 'Z' || text[pos] == 'z') {
    ++pos;
  } else if (text[pos] == '+' || text[pos] == '-') {
    const int sign = text[pos] == '+' ? 1 : -1;
    ++pos;
    const int oh = take_digits(text, pos, 2);
    expect_char(text, pos, ':');
    const int om = take_digits(text, pos, 2);
    if (oh > 23 || om > 59) {
      throw ParseError("invalid UTC offset: '" + std::string(text) + "'");
    }
    offset = sign * (oh * 3600 + om * 60);
  } else {
    throw ParseError("missing UTC offset: '" + std::string(text) + "'");
  }
  if (pos != text.size()) {
    throw ParseError("trailing characters in timestamp: '" + std::string(text) + "'");
  }
  return days_from_civil(date) * kSecondsPerDay + hour * 3600 + minute * 60 +
         second - offset;
}

CivilDate parse_date(std::string_view text) {
  if (text.size() > 10) {
    return utc_date(parse_rfc3339(text));
  }
  std::size_t pos = 0;
  CivilDate date;
  date.year = take_digits(text, pos, 4);
  expect_char(text, pos, '-');
  date.month = take_digits(text, pos, 2);
  expect_char(text, pos, '-');
  date.day = take_digits(text, pos, 2);
  if (pos != text.size() || !is_valid_date(date)) {
    throw ParseError("invalid date: '" + std::string(text) + "'");
  }
  return date;
}

CivilDate utc_date(std::int64_t epoch_seconds) {
  std::int64_t days = epoch_seconds / kSecondsPerDay;
  if (epoch_seconds % kSecondsPerDay < 0) --days;
  return civil_from_days(days);
}

std::string format_rfc3339(std::int64_t epoch_seconds) {
  std::int64_t days = epoch_seconds / kSecondsPerDay;
  std::int64_t rem = epoch_seconds % kSecondsPerDay;
  if (rem < 0) {
    rem += kSecondsPerDay;
    --days;
  }
  const CivilDate d = civil_from_days(days);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", d.year,
                d.month, d.day, static_cast<int>(rem / 3600),
                static_cast<int>(rem / 60 % 60), static_cast<int>(rem % 60));
  return buf;
}

std::string format_date(const CivilDate& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

}  // namespace threatscope
