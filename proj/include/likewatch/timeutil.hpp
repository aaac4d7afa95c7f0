#pragma once

#include <cstdint>
#include <string>

namespace lw {

using Time = std::int64_t;  // epoch seconds

constexpr Time kWindowSeconds = 900;  // fixed 15-minute rate windows

// Windows are aligned to multiples of 15 minutes from the unix epoch.
inline std::int64_t window_index(Time t) {
  return t >= 0 ? t / kWindowSeconds : (t - kWindowSeconds + 1) / kWindowSeconds;
}

inline Time window_end(Time t) { return (window_index(t) + 1) * kWindowSeconds; }

// Year*12 + month index of the civil date holding t (UTC). Used for the
// calendar-month tweet cap.
std::int64_t month_index(Time t);

// Epoch second at which the next calendar month starts.
Time next_month_start(Time t);

std::string rfc3339(Time t);

// Accepts either a plain integer (epoch seconds) or YYYY-MM-DDTHH:MM:SSZ.
Time parse_time(const std::string& s);

}  // namespace lw
