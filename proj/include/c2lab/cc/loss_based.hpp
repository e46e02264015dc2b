#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string_view>

#include "c2lab/units.hpp"

namespace c2lab::cc {

enum class Flavor { NewReno, Cubic };
enum class Phase { SlowStart, CongestionAvoidance, Recovery };
enum class LossKind { TripleDupAck, Timeout };

constexpr std::string_view to_string(Flavor f) { return f == Flavor::NewReno ? "newreno" : "cubic"; }

constexpr std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::SlowStart: return "slow_start";
    case Phase::CongestionAvoidance: return "congestion_avoidance";
    case Phase::Recovery: return "recovery";
  }
  return "?";
}

/// Cubic scaling constant, packets / s^3.
inline constexpr double kCubicC = 0.4;
/// Cubic multiplicative decrease factor.
inline constexpr double kCubicBeta = 0.7;
inline constexpr double kMinSsthresh = 2.0;
inline constexpr double kInitialCwnd = 10.0;

struct LossBasedState {
  double cwnd = kInitialCwnd;
  double ssthresh = std::numeric_limits<double>::infinity();
  Phase phase = Phase::SlowStart;
  Flavor flavor = Flavor::NewReno;

  // Cubic auxiliaries.
  double cubic_wmax = 0.0;
  std::optional<SimTime> cubic_epoch_start;
  double cubic_k = 0.0;       ///< seconds
  double cubic_origin = 0.0;  ///< window the cubic curve plateaus at
  double cubic_tcp_estimate = 0.0;
  Duration min_rtt = Duration::max();
};

/// K: time for the cubic curve to climb from `cwnd` back to `wmax`.
inline double cubic_k(double wmax, double cwnd) {
  return wmax > cwnd ? std::cbrt((wmax - cwnd) / kCubicC) : 0.0;
}

/// W(t) = C (t - K)^3 + W_origin, t in seconds since the epoch start.
inline double cubic_window(double origin, double k, double t) {
  const double d = t - k;
  return kCubicC * d * d * d + origin;
}

namespace detail {

inline void cubic_reset_epoch(LossBasedState& l) { l.cubic_epoch_start.reset(); }

// One acked packet of Cubic congestion avoidance.
inline void cubic_grow(LossBasedState& l, SimTime now) {
  if (!l.cubic_epoch_start) {
    l.cubic_epoch_start = now;
    if (l.cwnd < l.cubic_wmax) {
      l.cubic_k = cubic_k(l.cubic_wmax, l.cwnd);
      l.cubic_origin = l.cubic_wmax;
    } else {
      l.cubic_k = 0.0;
      l.cubic_origin = l.cwnd;
    }
    l.cubic_tcp_estimate = l.cwnd;
  }
  const Duration rtt = l.min_rtt == Duration::max() ? Duration{0} : l.min_rtt;
  const double t = to_seconds(now - *l.cubic_epoch_start + rtt);
  const double target = std::min(cubic_window(l.cubic_origin, l.cubic_k, t), 1.5 * l.cwnd);
  if (target > l.cwnd) {
    l.cwnd += (target - l.cwnd) / l.cwnd;
  } else {
    l.cwnd += 0.01 / l.cwnd;
  }
  // TCP-friendly region: track what a Reno flow with the same loss history
  // would have.
  l.cubic_tcp_estimate += (3.0 * (1.0 - kCubicBeta) / (1.0 + kCubicBeta)) / l.cwnd;
  if (l.cubic_tcp_estimate > l.cwnd) l.cwnd = l.cubic_tcp_estimate;
}

}  // namespace detail

/// Slow-start threshold after a loss (real or imaginary). For Cubic this also
/// records W_max and ends the current growth epoch.
inline double recalc_ssthresh(LossBasedState& l, int inflight) {
  if (l.flavor == Flavor::NewReno) {
    return std::max(static_cast<double>(inflight) / 2.0, kMinSsthresh);
  }
  // Fast convergence: release bandwidth when the previous peak was not reached.
  if (l.cwnd < l.cubic_wmax) {
    l.cubic_wmax = l.cwnd * (1.0 + kCubicBeta) / 2.0;
  } else {
    l.cubic_wmax = l.cwnd;
  }
  detail::cubic_reset_epoch(l);
  return std::max(l.cwnd * kCubicBeta, kMinSsthresh);
}

/// Per-ack window growth of the underlying loss-based TCP.
inline void loss_based_grow(LossBasedState& l, Duration rtt, SimTime now, int acked_packets) {
  if (rtt < l.min_rtt) l.min_rtt = rtt;
  if (l.phase == Phase::Recovery || acked_packets <= 0) return;

  int remaining = acked_packets;
  if (l.phase == Phase::SlowStart) {
    while (remaining > 0 && l.cwnd < l.ssthresh) {
      l.cwnd = std::min(l.cwnd + 1.0, l.ssthresh);
      --remaining;
    }
    if (l.cwnd < l.ssthresh) return;
    l.phase = Phase::CongestionAvoidance;
  }
  for (; remaining > 0; --remaining) {
    if (l.flavor == Flavor::NewReno) {
      l.cwnd += 1.0 / l.cwnd;
    } else {
      detail::cubic_grow(l, now);
    }
  }
}

/// Reaction to an actual drop. Triple duplicate acks halve (NewReno) or scale
/// by beta (Cubic) and enter Recovery; a retransmission timeout collapses the
/// window to one packet.
inline void loss_based_on_loss(LossBasedState& l, LossKind kind, int inflight) {
  l.ssthresh = recalc_ssthresh(l, inflight);
  detail::cubic_reset_epoch(l);
  if (kind == LossKind::TripleDupAck) {
    l.cwnd = std::max(l.ssthresh, 1.0);
    l.phase = Phase::Recovery;
  } else {
    l.cwnd = 1.0;
    l.phase = Phase::SlowStart;
  }
}

inline void loss_based_exit_recovery(LossBasedState& l) {
  if (l.phase != Phase::Recovery) return;
  l.phase = l.cwnd < l.ssthresh ? Phase::SlowStart : Phase::CongestionAvoidance;
}

}  // namespace c2lab::cc
