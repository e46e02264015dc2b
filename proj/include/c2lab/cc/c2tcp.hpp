#pragma once

// C2TCP window-refining overlay on top of a loss-based TCP.
//
// The condition detector classifies each ack by comparing its RTT against
// Setpoint = alpha * MINRTT. A Bad condition (RTT stayed above Setpoint for a
// whole monitoring Interval) is handled like a timeout; a Good condition boosts
// the window beyond the loss-based growth. The tuner moves alpha every tuning
// cycle so that the average RTT approaches the application's Target.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "c2lab/cc/loss_based.hpp"
#include "c2lab/units.hpp"

namespace c2lab::cc {

enum class Condition { Good, Normal, Bad };

constexpr std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::Good: return "good";
    case Condition::Normal: return "normal";
    case Condition::Bad: return "bad";
  }
  return "?";
}

inline constexpr double kMinAlpha = 1.0;
inline constexpr double kMaxAlpha = 10.0;
inline constexpr Duration kTuningCycle = std::chrono::milliseconds{500};

struct C2tcpState {
  Duration minrtt_global = Duration::max();
  double alpha = kMinAlpha;
  bool alpha_initialized = false;
  FineDuration setpoint{0.0};
  FineDuration interval{0.0};
  FineTime next_time{};
  bool first_time = true;
  int n_backoffs = 1;
  Condition condition = Condition::Good;
  Duration target{};
  Duration cycle_rtt_sum{0};
  std::int64_t cycle_rtt_count = 0;
};

/// Per-connection congestion state: the loss-based window plus, when enabled,
/// the C2TCP overlay.
struct FlowState {
  LossBasedState loss;
  std::optional<C2tcpState> c2tcp;
  /// Sender's packets-in-network estimate as of the latest ack.
  int inflight = 0;
  std::optional<SimTime> last_ack_at;
};

struct AckSample {
  Duration rtt;
  SimTime now;
  int acked_packets = 1;
  int inflight = 0;
};

struct ConditionReport {
  /// Condition after processing the ack (persists across acks where no
  /// branch of the detector fires).
  Condition condition;
  /// Branch that fired on this ack, if any.
  std::optional<Condition> detected;
  /// True iff the action enforcer ran.
  bool enforced = false;
};

struct FlowConfig {
  Flavor flavor = Flavor::NewReno;
  /// Enables the overlay with this average-delay Target.
  std::optional<Duration> c2tcp_target;
  /// Overrides the first-sample alpha choice.
  std::optional<double> initial_alpha;
  double initial_cwnd = kInitialCwnd;
};

inline FlowState make_flow(const FlowConfig& cfg) {
  if (!(cfg.initial_cwnd >= 1.0)) throw ConfigError("initial cwnd must be >= 1");
  FlowState f;
  f.loss.flavor = cfg.flavor;
  f.loss.cwnd = cfg.initial_cwnd;
  if (cfg.c2tcp_target) {
    if (cfg.c2tcp_target->count() <= 0) throw ConfigError("C2TCP target must be positive");
    C2tcpState c;
    c.target = *cfg.c2tcp_target;
    if (cfg.initial_alpha) {
      c.alpha = std::clamp(*cfg.initial_alpha, kMinAlpha, kMaxAlpha);
      c.alpha_initialized = true;
    }
    f.c2tcp = c;
  }
  return f;
}

inline double recalc_ssthresh(FlowState& flow) { return recalc_ssthresh(flow.loss, flow.inflight); }

inline void loss_based_on_ack(FlowState& flow, const AckSample& sample) {
  loss_based_grow(flow.loss, sample.rtt, sample.now, sample.acked_packets);
}

inline void on_loss(FlowState& flow, LossKind kind) {
  loss_based_on_loss(flow.loss, kind, flow.inflight);
}

/// Applies the detected condition to the window.
inline void action_enforcer(FlowState& flow, Condition condition, Duration rtt,
                            FineDuration setpoint) {
  auto& l = flow.loss;
  switch (condition) {
    case Condition::Good:
      l.cwnd += (setpoint / FineDuration(rtt)) * (1.0 / l.cwnd);
      break;
    case Condition::Normal:
      break;
    case Condition::Bad:
      l.ssthresh = recalc_ssthresh(flow);
      l.cwnd = 1.0;
      l.phase = Phase::SlowStart;
      break;
  }
}

/// Processes one ack: loss-based growth, then condition detection and
/// enforcement when the overlay is enabled.
inline std::optional<ConditionReport> on_ack(FlowState& flow, const AckSample& sample) {
  if (sample.rtt.count() <= 0) throw std::invalid_argument("on_ack: rtt must be positive");
  if (flow.last_ack_at && sample.now < *flow.last_ack_at) {
    throw std::invalid_argument("on_ack: time went backwards");
  }
  flow.last_ack_at = sample.now;
  flow.inflight = sample.inflight;

  loss_based_on_ack(flow, sample);
  if (!flow.c2tcp) return std::nullopt;
  auto& c = *flow.c2tcp;

  const Duration rtt = sample.rtt;
  const FineTime now{FineDuration(sample.now.time_since_epoch())};
  bool action_required = false;
  std::optional<Condition> detected;

  if (rtt < c.minrtt_global) c.minrtt_global = rtt;
  if (!c.alpha_initialized) {
    c.alpha = std::clamp(FineDuration(c.target) / FineDuration(rtt), kMinAlpha, kMaxAlpha);
    c.alpha_initialized = true;
  }
  c.setpoint = c.alpha * FineDuration(c.minrtt_global);
  if (c.interval.count() <= 0.0) c.interval = c.setpoint;

  if (FineDuration(rtt) < c.setpoint) {
    c.interval = c.setpoint;
    c.condition = Condition::Good;
    c.first_time = true;
    c.n_backoffs = 1;
    action_required = true;
    detected = Condition::Good;
  } else if (c.first_time) {
    c.condition = Condition::Normal;
    c.next_time = now + c.interval;
    c.first_time = false;
    detected = Condition::Normal;
  } else if (now > c.next_time) {
    c.condition = Condition::Bad;
    c.next_time = now + c.interval / std::sqrt(static_cast<double>(c.n_backoffs));
    ++c.n_backoffs;
    action_required = true;
    detected = Condition::Bad;
  }

  c.cycle_rtt_sum += rtt;
  ++c.cycle_rtt_count;

  if (action_required) action_enforcer(flow, c.condition, rtt, c.setpoint);
  return ConditionReport{c.condition, detected, action_required};
}

/// One tuning cycle: steers alpha from the average RTT of the elapsed cycle.
inline void tuner_tick(FlowState& flow, SimTime /*now*/) {
  if (!flow.c2tcp) return;
  auto& c = *flow.c2tcp;
  if (c.cycle_rtt_count == 0) return;
  const double avg_rtt = static_cast<double>(c.cycle_rtt_sum.count()) /
                         static_cast<double>(c.cycle_rtt_count);
  const double target = static_cast<double>(c.target.count());
  if (avg_rtt < target) {
    c.alpha += (target - avg_rtt) / (2.0 * avg_rtt);
    if (kMaxAlpha <= c.alpha) c.alpha = kMaxAlpha;
  } else if (target < avg_rtt) {
    c.alpha -= 2.0 * (avg_rtt - target) / target;
    if (c.alpha <= kMinAlpha) c.alpha = kMinAlpha;
  }
  c.cycle_rtt_sum = Duration{0};
  c.cycle_rtt_count = 0;
}

/// The sender may put one more packet on the wire.
inline bool cwnd_allows_send(const FlowState& flow, int inflight) {
  return std::floor(flow.loss.cwnd) > static_cast<double>(inflight);
}

}  // namespace c2lab::cc
