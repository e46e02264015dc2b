#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace c2lab {

/// Simulation clock. Integer microseconds since the start of a run.
struct SimClock {
  using rep = std::int64_t;
  using period = std::micro;
  using duration = std::chrono::duration<rep, period>;
  using time_point = std::chrono::time_point<SimClock>;
  static constexpr bool is_steady = true;
};

using Duration = SimClock::duration;
using SimTime = SimClock::time_point;

/// Fractional microseconds, used where a duration is scaled by a real factor
/// (setpoints, shrinking intervals).
using FineDuration = std::chrono::duration<double, std::micro>;
using FineTime = std::chrono::time_point<SimClock, FineDuration>;

inline constexpr SimTime kSimStart{};

constexpr Duration from_ms(double ms) {
  return Duration{static_cast<std::int64_t>(ms * 1000.0 + (ms >= 0 ? 0.5 : -0.5))};
}

constexpr SimTime at_ms(double ms) { return kSimStart + from_ms(ms); }

template <typename Rep, typename Period>
constexpr double to_ms(std::chrono::duration<Rep, Period> d) {
  return std::chrono::duration<double, std::milli>(d).count();
}

template <typename Dur>
constexpr double to_ms(std::chrono::time_point<SimClock, Dur> t) {
  return to_ms(t.time_since_epoch());
}

template <typename Rep, typename Period>
constexpr double to_seconds(std::chrono::duration<Rep, Period> d) {
  return std::chrono::duration<double>(d).count();
}

constexpr std::int64_t to_us(Duration d) { return d.count(); }
constexpr std::int64_t to_us(SimTime t) { return t.time_since_epoch().count(); }

/// Invalid user-supplied configuration (scenario, trace, arguments).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace c2lab
