// Copyright 2026 The Deanon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef DEANON_DATES_HPP
#define DEANON_DATES_HPP

#include <charconv>
#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace deanon {

// Dates are stored as whole days since 1999-01-01. Accepted calendar range is
// 1999-01-01 .. 2035-12-31; anything outside it is almost certainly a unit
// error in the source data.
inline constexpr std::chrono::sys_days kDateEpoch{
    std::chrono::year{1999} / std::chrono::January / 1};
inline constexpr int kMinDay = 0;
inline constexpr int kMaxDay = static_cast<int>(
    (std::chrono::sys_days{std::chrono::year{2035} / std::chrono::December / 31} -
     kDateEpoch)
        .count());

// Parses strict YYYY-MM-DD. Returns nullopt for malformed, invalid or
// out-of-range dates.
inline std::optional<int> parse_iso_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto field = [&](std::size_t pos, std::size_t len) -> std::optional<unsigned> {
    unsigned v = 0;
    const char* first = text.data() + pos;
    const char* last = first + len;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) return std::nullopt;
    return v;
  };
  const auto y = field(0, 4);
  const auto m = field(5, 2);
  const auto d = field(8, 2);
  if (!y || !m || !d) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{static_cast<int>(*y)},
                                        std::chrono::month{*m},
                                        std::chrono::day{*d}};
  if (!ymd.ok()) return std::nullopt;
  const int day =
      static_cast<int>((std::chrono::sys_days{ymd} - kDateEpoch).count());
  if (day < kMinDay || day > kMaxDay) return std::nullopt;
  return day;
}

inline std::string format_iso_date(int day) {
  const std::chrono::year_month_day ymd{kDateEpoch + std::chrono::days{day}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

}  // namespace deanon

#endif  // DEANON_DATES_HPP
