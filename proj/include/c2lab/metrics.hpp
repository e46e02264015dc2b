#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "c2lab/units.hpp"

namespace c2lab {

/// One data packet delivered to a receiver.
struct PacketRecord {
  int flow_id = 0;
  std::uint64_t seq = 0;
  SimTime sent_at{};
  SimTime delivered_at{};
  /// Enqueue to dequeue at the bottleneck, including the wait for the next
  /// delivery opportunity.
  Duration queuing_delay{0};
  std::int32_t size_bytes = 0;
  /// Filled when the ack triggered by this packet reaches the sender.
  std::optional<Duration> e2e_rtt;
};

/// Smoothed mean deviation of a delay series, in the series' unit.
///
/// sdelay and dev follow the TCP RTT estimator recurrences (gains 1/8 and
/// 1/4); the result is the average of dev over all samples. The first sample
/// only seeds sdelay.
inline double jitter(std::span<const double> delays) {
  if (delays.empty()) return 0.0;
  constexpr double kDelayGain = 1.0 / 8.0;
  constexpr double kDevGain = 1.0 / 4.0;
  double sdelay = delays.front();
  double dev = 0.0;
  double dev_sum = 0.0;
  for (std::size_t i = 1; i < delays.size(); ++i) {
    dev = (1.0 - kDevGain) * dev + kDevGain * std::abs(delays[i] - sdelay);
    sdelay = (1.0 - kDelayGain) * sdelay + kDelayGain * delays[i];
    dev_sum += dev;
  }
  return dev_sum / static_cast<double>(delays.size());
}

/// Nearest-rank percentile, q in (0, 1].
inline double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty series");
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("percentile rank must be in (0, 1]");
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  auto nth = values.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(values.begin(), nth, values.end());
  return *nth;
}

/// (sum x)^2 / (n * sum x^2).
inline double jain_index(std::span<const double> throughputs) {
  if (throughputs.empty()) throw std::invalid_argument("jain_index of an empty set");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double x : throughputs) {
    if (x < 0.0) throw std::invalid_argument("jain_index: negative throughput");
    sum += x;
    sum_sq += x * x;
  }
  if (sum_sq == 0.0) throw std::invalid_argument("jain_index: all throughputs are zero");
  return sum * sum / (static_cast<double>(throughputs.size()) * sum_sq);
}

struct SecondSample {
  double t_s = 0.0;
  double throughput_mbps = 0.0;
  double avg_queuing_delay_ms = 0.0;
};

struct RunSummary {
  int flow_id = -1;  ///< -1 for the aggregate row
  std::string label;
  double throughput_mbps = 0.0;
  double avg_queuing_delay_ms = 0.0;
  double p95_queuing_delay_ms = 0.0;
  double avg_e2e_delay_ms = 0.0;
  double p95_e2e_delay_ms = 0.0;
  /// Jitter of the e2e delay (default) and of the queuing delay.
  double jitter_ms = 0.0;
  double queuing_jitter_ms = 0.0;
  double utilization = 0.0;
  std::uint64_t delivered_packets = 0;
  std::uint64_t sent_packets = 0;
  std::uint64_t loss_count = 0;
  double warmup_s = 0.0;
  double measured_s = 0.0;
  // C2TCP flows only.
  std::optional<double> final_alpha;
  std::optional<double> final_setpoint_ms;
  std::optional<double> minrtt_ms;
  std::vector<SecondSample> timeseries;
};

/// Aggregates records measured over `measured` of simulated time. Records are
/// taken in the given (arrival) order for jitter; everything else is
/// order-independent.
inline RunSummary summarize(std::span<const PacketRecord> records, Duration measured) {
  if (records.empty()) throw std::invalid_argument("summarize: no records");
  if (measured.count() <= 0) throw std::invalid_argument("summarize: measured span must be positive");
  RunSummary s;
  std::uint64_t bytes = 0;
  std::vector<double> queuing;
  std::vector<double> e2e;
  queuing.reserve(records.size());
  e2e.reserve(records.size());
  for (const auto& r : records) {
    bytes += static_cast<std::uint64_t>(r.size_bytes);
    queuing.push_back(to_ms(r.queuing_delay));
    if (r.e2e_rtt) e2e.push_back(to_ms(*r.e2e_rtt));
  }
  s.delivered_packets = records.size();
  s.measured_s = to_seconds(measured);
  s.throughput_mbps = static_cast<double>(bytes) * 8.0 / s.measured_s / 1e6;
  s.avg_queuing_delay_ms = std::accumulate(queuing.begin(), queuing.end(), 0.0) /
                           static_cast<double>(queuing.size());
  s.queuing_jitter_ms = jitter(queuing);
  s.p95_queuing_delay_ms = percentile(queuing, 0.95);
  if (!e2e.empty()) {
    s.avg_e2e_delay_ms = std::accumulate(e2e.begin(), e2e.end(), 0.0) / static_cast<double>(e2e.size());
    s.jitter_ms = jitter(e2e);
    s.p95_e2e_delay_ms = percentile(e2e, 0.95);
  }
  return s;
}

/// Per-second delivered throughput and mean queuing delay over [0, run).
inline std::vector<SecondSample> per_second_series(std::span<const PacketRecord> records, Duration run) {
  const auto bins = static_cast<std::size_t>((run.count() + 999'999) / 1'000'000);
  std::vector<std::uint64_t> bytes(bins, 0);
  std::vector<double> delay_sum(bins, 0.0);
  std::vector<std::uint64_t> count(bins, 0);
  for (const auto& r : records) {
    const auto bin = static_cast<std::size_t>(to_us(r.delivered_at) / 1'000'000);
    if (bin >= bins) continue;
    bytes[bin] += static_cast<std::uint64_t>(r.size_bytes);
    delay_sum[bin] += to_ms(r.queuing_delay);
    ++count[bin];
  }
  std::vector<SecondSample> out(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    out[i].t_s = static_cast<double>(i);
    out[i].throughput_mbps = static_cast<double>(bytes[i]) * 8.0 / 1e6;
    out[i].avg_queuing_delay_ms = count[i] ? delay_sum[i] / static_cast<double>(count[i]) : 0.0;
  }
  return out;
}

}  // namespace c2lab
