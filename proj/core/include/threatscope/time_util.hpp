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

#ifndef THREATSCOPE_TIME_UTIL_HPP_
#define THREATSCOPE_TIME_UTIL_HPP_

#include <cstdint>
#include <string>
#include <string_view>

namespace threatscope {

struct CivilDate {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31

  auto operator<=>(const CivilDate&) const = default;
};

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(const CivilDate& d);

// Inverse of days_from_civil.
CivilDate civil_from_days(std::int64_t days);

bool is_valid_date(const CivilDate& d);

// Parses an RFC 3339 timestamp ("2016-10-21T14:03:00Z",
// "2016-10-21 14:03:00+02:00", optional fractional seconds are discarded)
// into Unix seconds. Throws ParseError on malformed input.
std::int64_t parse_rfc3339(std::string_view text);

// Parses "YYYY-MM-DD", or a full RFC 3339 timestamp truncated to its date.
CivilDate parse_date(std::string_view text);

// UTC calendar date of a Unix timestamp.
CivilDate utc_date(std::int64_t epoch_seconds);

// "YYYY-MM-DDTHH:MM:SSZ".
std::string format_rfc3339(std::int64_t epoch_seconds);

// "YYYY-MM-DD".
std::string format_date(const CivilDate& d);

}  // namespace threatscope

#endif  // THREATSCOPE_TIME_UTIL_HPP_
