#pragma once

// Offline reference for the condition detector, written from the window
// definitions rather than the timer-free state machine:
//
//   Good    RTT(t) < Setpoint(t).
//   Normal  first ack of an above-Setpoint episode (the trailing window still
//           holds a below-Setpoint sample).
//   Bad     min RTT over the k-th monitoring window is >= Setpoint. Window 1
//           opens at the Normal ack and spans Interval; window k > 1 opens at
//           the previous Bad detection and spans Interval / sqrt(k - 1).
//           Detection happens at the first ack strictly after the window.
//
// Interval is the Setpoint of the most recent Good ack (the first sample's
// Setpoint before any Good ack). Alpha is fixed for the whole sequence.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "c2lab/cc/c2tcp.hpp"

namespace c2lab::oracle {

struct Sample {
  std::int64_t t_us;
  std::int64_t rtt_us;
};

struct OracleLabel {
  std::optional<cc::Condition> detected;
  cc::Condition condition;
};

inline std::vector<OracleLabel> oracle_labels(const std::vector<Sample>& samples, double alpha) {
  const std::size_t n = samples.size();
  std::vector<double> setpoint(n);
  std::int64_t running_min = std::numeric_limits<std::int64_t>::max();
  for (std::size_t i = 0; i < n; ++i) {
    running_min = std::min(running_min, samples[i].rtt_us);
    setpoint[i] = alpha * static_cast<double>(running_min);
  }
  auto good = [&](std::size_t i) { return static_cast<double>(samples[i].rtt_us) < setpoint[i]; };

  std::vector<OracleLabel> out(n, OracleLabel{std::nullopt, cc::Condition::Good});
  std::size_t i = 0;
  std::optional<std::size_t> last_good;
  while (i < n) {
    if (good(i)) {
      out[i] = {cc::Condition::Good, cc::Condition::Good};
      last_good = i;
      ++i;
      continue;
    }
    // Episode of consecutive above-Setpoint acks [i, end).
    std::size_t end = i;
    while (end < n && !good(end)) ++end;
    const double interval = last_good ? setpoint[*last_good] : setpoint[0];

    out[i] = {cc::Condition::Normal, cc::Condition::Normal};
    double window_open = static_cast<double>(samples[i].t_us);
    double window_len = interval;
    int k = 1;  // index of the window being watched
    cc::Condition current = cc::Condition::Normal;
    for (std::size_t j = i + 1; j < end; ++j) {
      const double t = static_cast<double>(samples[j].t_us);
      if (t > window_open + window_len) {
        // Cross-check the definition: every sample inside the window is at
        // or above its Setpoint.
        for (std::size_t m = j; m-- > i && static_cast<double>(samples[m].t_us) >= window_open;) {
          if (!(static_cast<double>(samples[m].rtt_us) >= setpoint[m])) {
            throw std::logic_error("oracle: window holds a below-Setpoint sample");
          }
        }
        current = cc::Condition::Bad;
        out[j] = {cc::Condition::Bad, current};
        window_open = t;
        window_len = interval / std::sqrt(static_cast<double>(k));
        ++k;
      } else {
        out[j] = {std::nullopt, current};
      }
    }
    i = end;
  }
  return out;
}

/// Random ack stream: nondecreasing timestamps (repeats allowed) and RTTs
/// that wander between runs near a floor and long excursions above it, so
/// that Good, Normal and repeated Bad detections all occur.
inline std::vector<Sample> random_sequence(std::mt19937_64& rng, std::size_t length) {
  std::uniform_int_distribution<std::int64_t> floor_ms(2, 100);
  std::uniform_int_distribution<std::int64_t> gap_us(0, 8000);
  std::uniform_int_distribution<int> regime_len(1, 400);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::int64_t floor_us = floor_ms(rng) * 1000;
  std::vector<Sample> out;
  out.reserve(length);
  std::int64_t t = std::uniform_int_distribution<std::int64_t>(0, 1'000'000)(rng);
  while (out.size() < length) {
    // Regime: multiplier range for RTT relative to the floor.
    const double lo = 1.0 + 4.0 * unit(rng);
    const double hi = lo + 6.0 * unit(rng);
    const int len = regime_len(rng);
    for (int r = 0; r < len && out.size() < length; ++r) {
      t += gap_us(rng) * (unit(rng) < 0.1 ? 0 : 1);
      const double m = lo + (hi - lo) * unit(rng);
      // Occasional new minimum below the floor.
      const double dip = unit(rng) < 0.002 ? 0.7 + 0.3 * unit(rng) : 1.0;
      out.push_back(Sample{t, std::max<std::int64_t>(1, static_cast<std::int64_t>(floor_us * m * dip))});
    }
  }
  return out;
}

}  // namespace c2lab::oracle
