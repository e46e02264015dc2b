#pragma once

// Steady-state RTT bounds for a single long-lived C2TCP flow on a constant
// bottleneck of `bw` packets per second.

#include <stdexcept>

#include "c2lab/units.hpp"

namespace c2lab::cc {

/// alpha * (MINRTT + 1 / (2 bw)).
inline FineDuration predicted_rtt_bound(double alpha, FineDuration minrtt, double bw_pkts_per_s) {
  if (!(alpha >= 1.0) || !(minrtt.count() > 0.0) || !(bw_pkts_per_s > 0.0)) {
    throw std::invalid_argument("predicted_rtt_bound: need alpha >= 1, minrtt > 0, bw > 0");
  }
  const FineDuration half_packet_time{1e6 / (2.0 * bw_pkts_per_s)};
  return alpha * (minrtt + half_packet_time);
}

/// 1.5 * Setpoint, valid when one packet time is at most MINRTT.
inline FineDuration relaxed_rtt_bound(double alpha, FineDuration minrtt) {
  if (!(alpha >= 1.0) || !(minrtt.count() > 0.0)) {
    throw std::invalid_argument("relaxed_rtt_bound: need alpha >= 1, minrtt > 0");
  }
  return 1.5 * alpha * minrtt;
}

/// Setpoint that moves the next cycle's average RTT to the tuner's aim point:
/// halfway towards Target from below, or mirrored across Target from above.
inline FineDuration retargeted_setpoint(FineDuration setpoint, FineDuration avg_rtt,
                                        FineDuration target) {
  if (!(avg_rtt.count() > 0.0) || !(target.count() > 0.0)) {
    throw std::invalid_argument("retargeted_setpoint: need avg_rtt > 0, target > 0");
  }
  FineDuration aim = avg_rtt;
  if (avg_rtt > target) {
    aim = avg_rtt - 2.0 * (avg_rtt - target);
  } else if (avg_rtt < target) {
    aim = target - (target - avg_rtt) / 2.0;
  }
  return (aim / avg_rtt) * setpoint;
}

}  // namespace c2lab::cc
