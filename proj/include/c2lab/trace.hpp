#pragma once

// Mahimahi-compatible link traces: one line per delivery opportunity, each an
// integer millisecond timestamp. A trace loops with period equal to its last
// timestamp.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "c2lab/units.hpp"

namespace c2lab {

/// Bytes a single delivery opportunity can carry.
inline constexpr int kOpportunityBytes = 1500;

struct LinkTrace {
  /// Nondecreasing opportunity timestamps in milliseconds.
  std::vector<std::int64_t> opportunities_ms;
  /// File path or a synthetic descriptor.
  std::string source;

  std::int64_t period_ms() const {
    return opportunities_ms.empty() ? 0 : opportunities_ms.back();
  }
  std::size_t size() const { return opportunities_ms.size(); }

  /// Timestamp of the i-th opportunity of the looped trace.
  SimTime opportunity_at(std::uint64_t index) const {
    const auto n = opportunities_ms.size();
    const auto lap = static_cast<std::int64_t>(index / n);
    const auto ms = opportunities_ms[index % n] + lap * period_ms();
    return kSimStart + Duration{ms * 1000};
  }

  /// Number of opportunities of the looped trace falling in [from, to).
  std::uint64_t opportunities_between(SimTime from, SimTime to) const {
    if (to <= from) return 0;
    return count_before(to) - count_before(from);
  }

  /// Average capacity of one period in Mbit/s.
  double mean_rate_mbps() const {
    return static_cast<double>(size()) * kOpportunityBytes * 8.0 /
           (static_cast<double>(period_ms()) * 1000.0);
  }

  bool operator==(const LinkTrace& other) const {
    return opportunities_ms == other.opportunities_ms;
  }

 private:
  // Opportunities with timestamp strictly before t.
  std::uint64_t count_before(SimTime t) const {
    const std::int64_t us = to_us(t);
    if (us <= 0) return 0;
    const std::int64_t period_us = period_ms() * 1000;
    // A lap's last opportunity sits on the lap boundary, so a boundary
    // instant still belongs to the partial lap before it.
    const auto laps = static_cast<std::uint64_t>((us - 1) / period_us);
    const std::int64_t rem_us = us - static_cast<std::int64_t>(laps) * period_us;
    const auto it = std::lower_bound(
        opportunities_ms.begin(), opportunities_ms.end(), rem_us,
        [](std::int64_t ms, std::int64_t bound) { return ms * 1000 < bound; });
    return laps * size() + static_cast<std::uint64_t>(it - opportunities_ms.begin());
  }
};

inline LinkTrace parse_trace(std::string_view text, std::string source = "<memory>") {
  LinkTrace trace;
  trace.source = std::move(source);
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
      line.remove_suffix(1);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (line.empty()) continue;

    std::int64_t ms = 0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), ms);
    if (ec != std::errc{} || ptr != line.data() + line.size() || ms < 0) {
      throw ConfigError(trace.source + ":" + std::to_string(line_no) +
                        ": expected a nonnegative integer millisecond timestamp, got '" +
                        std::string(line) + "'");
    }
    if (!trace.opportunities_ms.empty() && ms < trace.opportunities_ms.back()) {
      throw ConfigError(trace.source + ":" + std::to_string(line_no) +
                        ": timestamps must be nondecreasing (" + std::to_string(ms) + " after " +
                        std::to_string(trace.opportunities_ms.back()) + ")");
    }
    trace.opportunities_ms.push_back(ms);
  }
  if (trace.opportunities_ms.empty()) throw ConfigError(trace.source + ": empty trace");
  if (trace.period_ms() == 0) {
    throw ConfigError(trace.source + ": last timestamp must be positive so the trace can loop");
  }
  return trace;
}

inline std::string serialize_trace(const LinkTrace& trace) {
  std::string out;
  out.reserve(trace.size() * 6);
  for (auto ms : trace.opportunities_ms) {
    out += std::to_string(ms);
    out += '\n';
  }
  return out;
}

inline LinkTrace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open trace file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trace(buf.str(), path.string());
}

inline void save_trace(const LinkTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write trace file " + path.string());
  out << serialize_trace(trace);
}

namespace detail {

// Appends one constant-rate segment covering milliseconds (offset, offset + length].
// Rate accounting is exact in integer arithmetic: each ms adds rate_bps to a
// credit counted in millibits.
inline void append_constant(std::vector<std::int64_t>& out, double rate_mbps,
                            std::int64_t offset_ms, std::int64_t length_ms) {
  const auto rate_bps = static_cast<std::int64_t>(std::llround(rate_mbps * 1e6));
  constexpr std::int64_t kOpportunityMillibits = std::int64_t{kOpportunityBytes} * 8 * 1000;
  std::int64_t credit = 0;
  for (std::int64_t ms = 1; ms <= length_ms; ++ms) {
    credit += rate_bps;
    while (credit >= kOpportunityMillibits) {
      out.push_back(offset_ms + ms);
      credit -= kOpportunityMillibits;
    }
  }
}

inline std::int64_t whole_ms(Duration d, const char* what) {
  if (d.count() <= 0 || d.count() % 1000 != 0) {
    throw ConfigError(std::string(what) + ": duration must be a positive whole number of ms");
  }
  return d.count() / 1000;
}

}  // namespace detail

inline LinkTrace gen_constant(double rate_mbps, Duration duration) {
  if (!(rate_mbps > 0)) throw ConfigError("gen_constant: rate must be positive");
  const auto length_ms = detail::whole_ms(duration, "gen_constant");
  LinkTrace trace;
  detail::append_constant(trace.opportunities_ms, rate_mbps, 0, length_ms);
  if (trace.opportunities_ms.empty()) {
    throw ConfigError("gen_constant: rate too low for a single opportunity in the duration");
  }
  std::ostringstream desc;
  desc << "constant:" << rate_mbps << "Mbps/" << length_ms << "ms";
  trace.source = desc.str();
  return trace;
}

struct RateLevel {
  double rate_mbps;
  Duration duration;
};

/// Concatenation of independently generated constant segments.
inline LinkTrace gen_step(const std::vector<RateLevel>& levels) {
  if (levels.empty()) throw ConfigError("gen_step: no levels");
  LinkTrace trace;
  std::int64_t offset = 0;
  std::ostringstream desc;
  desc << "step:";
  for (const auto& level : levels) {
    if (!(level.rate_mbps > 0)) throw ConfigError("gen_step: rates must be positive");
    const auto length = detail::whole_ms(level.duration, "gen_step");
    detail::append_constant(trace.opportunities_ms, level.rate_mbps, offset, length);
    offset += length;
    desc << level.rate_mbps << "Mbps/" << length << "ms;";
  }
  if (trace.opportunities_ms.empty()) throw ConfigError("gen_step: no opportunities generated");
  trace.source = desc.str();
  return trace;
}

/// Multiplies capacity by an integer factor by repeating every opportunity.
inline LinkTrace scale_trace(const LinkTrace& trace, int factor) {
  if (factor < 1) throw ConfigError("scale_trace: factor must be >= 1");
  LinkTrace out;
  out.opportunities_ms.reserve(trace.size() * static_cast<std::size_t>(factor));
  for (auto ms : trace.opportunities_ms) out.opportunities_ms.insert(out.opportunities_ms.end(), factor, ms);
  out.source = trace.source + " x" + std::to_string(factor);
  return out;
}

/// Parameters of the synthetic cellular-like trace generator.
struct VariableTraceParams {
  std::uint64_t seed = 1;
  Duration duration = std::chrono::seconds{60};
  double min_mbps = 1.0;
  double max_mbps = 24.0;
  double start_mbps = 8.0;
  /// Rate is redrawn at this granularity.
  Duration step = std::chrono::milliseconds{200};
  /// Standard deviation of the log-rate change per step.
  double volatility = 0.25;
  /// Pull of the log-rate towards the geometric mid-range, per step.
  double reversion = 0.05;
};

/// Mean-reverting random walk in log-rate. Uses only the raw mt19937_64 output
/// stream so the result is identical across standard library implementations.
inline LinkTrace gen_variable(const VariableTraceParams& p) {
  if (!(p.min_mbps > 0) || !(p.max_mbps >= p.min_mbps)) {
    throw ConfigError("gen_variable: need 0 < min_mbps <= max_mbps");
  }
  const auto total_ms = detail::whole_ms(p.duration, "gen_variable");
  const auto step_ms = detail::whole_ms(p.step, "gen_variable step");
  std::mt19937_64 rng(p.seed);
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  const double lo = std::log(p.min_mbps);
  const double hi = std::log(p.max_mbps);
  const double mid = 0.5 * (lo + hi);
  double log_rate = std::clamp(std::log(p.start_mbps), lo, hi);

  LinkTrace trace;
  for (std::int64_t offset = 0; offset < total_ms; offset += step_ms) {
    const auto length = std::min(step_ms, total_ms - offset);
    detail::append_constant(trace.opportunities_ms, std::exp(log_rate), offset, length);
    // Sum of three uniforms approximates a normal draw with unit variance.
    const double z = (uniform() + uniform() + uniform() - 1.5) * 2.0;
    log_rate += p.volatility * z + p.reversion * (mid - log_rate);
    log_rate = std::clamp(log_rate, lo, hi);
  }
  if (trace.opportunities_ms.empty()) throw ConfigError("gen_variable: no opportunities generated");
  trace.source = "variable:seed=" + std::to_string(p.seed);
  return trace;
}

}  // namespace c2lab
