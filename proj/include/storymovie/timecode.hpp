#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace storymovie {

/// Milliseconds from the start of a track.
using Millis = std::int64_t;

/// Formats as HH:MM:SS,mmm. Hours widen past two digits when needed.
inline std::string format_timestamp(Millis ms, char decimal_sep = ',') {
  if (ms < 0) ms = 0;
  const Millis millis = ms % 1000;
  const Millis total_s = ms / 1000;
  const Millis secs = total_s % 60;
  const Millis mins = (total_s / 60) % 60;
  const Millis hours = total_s / 3600;
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%02lld:%02lld:%02lld%c%03lld", static_cast<long long>(hours),
                static_cast<long long>(mins), static_cast<long long>(secs), decimal_sep,
                static_cast<long long>(millis));
  return buf;
}

/// Parses HH:MM:SS,mmm (a period is accepted in place of the comma).
/// Minutes and seconds must be below 60 and the fraction exactly three digits.
inline std::optional<Millis> parse_timestamp(std::string_view s) {
  auto read_int = [](std::string_view part, std::size_t min_digits,
                     std::size_t max_digits) -> std::optional<Millis> {
    if (part.size() < min_digits || part.size() > max_digits) return std::nullopt;
    Millis value = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc() || ptr != part.data() + part.size()) return std::nullopt;
    return value;
  };
  const auto c1 = s.find(':');
  if (c1 == std::string_view::npos) return std::nullopt;
  const auto c2 = s.find(':', c1 + 1);
  if (c2 == std::string_view::npos) return std::nullopt;
  const auto dot = s.find_first_of(",.", c2 + 1);
  if (dot == std::string_view::npos) return std::nullopt;
  auto h = read_int(s.substr(0, c1), 1, 6);
  auto m = read_int(s.substr(c1 + 1, c2 - c1 - 1), 2, 2);
  auto sec = read_int(s.substr(c2 + 1, dot - c2 - 1), 2, 2);
  auto frac = read_int(s.substr(dot + 1), 3, 3);
  if (!h || !m || !sec || !frac || *m >= 60 || *sec >= 60) return std::nullopt;
  return ((*h * 60 + *m) * 60 + *sec) * 1000 + *frac;
}

}  // namespace storymovie
