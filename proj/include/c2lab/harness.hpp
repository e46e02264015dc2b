#pragma once

// Experiment drivers: single runs, Target and buffer sweeps, and the
// two-flow shared-queue fairness experiment.

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "c2lab/metrics.hpp"
#include "c2lab/scenario.hpp"
#include "c2lab/sim/emulator.hpp"

namespace c2lab {

struct ScenarioRun {
  Scenario scenario;
  sim::RunResult result;
  /// One row per flow, then the aggregate row (flow_id -1).
  std::vector<RunSummary> summaries;
  /// Per-second link capacity over the run, Mbit/s (first link).
  std::vector<double> capacity_mbps;
};

namespace detail {

inline RunSummary summarize_window(std::span<const PacketRecord> records, SimTime from, SimTime to,
                                   std::uint64_t capacity_opportunities) {
  std::vector<PacketRecord> window;
  for (const auto& r : records) {
    if (r.delivered_at >= from && r.delivered_at < to) window.push_back(r);
  }
  const Duration measured = to - from;
  RunSummary s;
  if (!window.empty() && measured.count() > 0) s = summarize(window, measured);
  s.measured_s = to_seconds(measured);
  if (capacity_opportunities > 0) {
    std::uint64_t bytes = 0;
    for (const auto& r : window) bytes += static_cast<std::uint64_t>(r.size_bytes);
    s.utilization = static_cast<double>(bytes) /
                    static_cast<double>(capacity_opportunities * static_cast<std::uint64_t>(kOpportunityBytes));
  }
  return s;
}

}  // namespace detail

/// Per-flow and aggregate summaries with the warm-up excluded. A flow's
/// window runs from max(warm-up, start) to its stop time or the end of run.
inline std::vector<RunSummary> summarize_run(const sim::RunResult& run, const Scenario& scenario,
                                             const LinkTrace& trace) {
  const SimTime end = kSimStart + run.duration;
  const SimTime warm = kSimStart + std::min(scenario.warmup, run.duration);
  std::vector<RunSummary> out;
  for (std::size_t i = 0; i < run.flows.size(); ++i) {
    const auto& flow = run.flows[i];
    const auto& entry = scenario.flows[i];
    const SimTime from = std::max(warm, kSimStart + entry.start);
    const SimTime to = entry.stop ? std::min(end, kSimStart + *entry.stop) : end;
    std::vector<PacketRecord> own;
    for (const auto& r : run.records) {
      if (r.flow_id == flow.flow_id) own.push_back(r);
    }
    RunSummary s = detail::summarize_window(own, from, std::max(from, to), trace.opportunities_between(from, to));
    s.flow_id = flow.flow_id;
    s.label = flow.label;
    s.warmup_s = to_seconds(from - kSimStart);
    s.sent_packets = flow.sender.transmissions;
    s.loss_count = flow.dropped;
    if (flow.final_state.c2tcp) {
      const auto& c = *flow.final_state.c2tcp;
      s.final_alpha = c.alpha;
      s.final_setpoint_ms = c.setpoint.count() / 1000.0;
      if (c.minrtt_global != Duration::max()) s.minrtt_ms = to_ms(c.minrtt_global);
    }
    s.timeseries = per_second_series(own, run.duration);
    out.push_back(std::move(s));
  }
  RunSummary all = detail::summarize_window(run.records, warm, end, trace.opportunities_between(warm, end));
  all.flow_id = -1;
  all.label = "all";
  all.warmup_s = to_seconds(warm - kSimStart);
  for (const auto& f : run.flows) {
    all.sent_packets += f.sender.transmissions;
    all.loss_count += f.dropped;
  }
  // Shared-queue and per-flow links see the same trace, so capacity scales
  // with the number of links.
  if (!run.links.empty()) all.utilization /= static_cast<double>(run.links.size());
  all.timeseries = per_second_series(run.records, run.duration);
  out.push_back(std::move(all));
  return out;
}

inline std::vector<double> capacity_series(const LinkTrace& trace, Duration run) {
  const auto bins = static_cast<std::size_t>((run.count() + 999'999) / 1'000'000);
  std::vector<double> out(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    const SimTime from = kSimStart + std::chrono::seconds{static_cast<std::int64_t>(i)};
    const auto n = trace.opportunities_between(from, from + std::chrono::seconds{1});
    out[i] = static_cast<double>(n) * kOpportunityBytes * 8.0 / 1e6;
  }
  return out;
}

inline ScenarioRun run_scenario(const Scenario& scenario) {
  validate(scenario);
  ScenarioRun r;
  r.scenario = scenario;
  auto config = emu_config(scenario);
  const LinkTrace trace = config.trace;
  r.result = sim::run(std::move(config), flow_specs(scenario), scenario.duration);
  r.summaries = summarize_run(r.result, scenario, trace);
  r.capacity_mbps = capacity_series(trace, scenario.duration);
  return r;
}

/// Runs independent scenarios on up to `jobs` threads (0: hardware
/// concurrency). Results keep the input order; the first failure is rethrown.
inline std::vector<ScenarioRun> run_all(const std::vector<Scenario>& scenarios, unsigned jobs = 0) {
  std::vector<ScenarioRun> results(scenarios.size());
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(scenarios.size()));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < scenarios.size(); ++i) results[i] = run_scenario(scenarios[i]);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < scenarios.size(); i = next++) {
          try {
            results[i] = run_scenario(scenarios[i]);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

struct SweepRow {
  /// Target in ms or buffer size in bytes.
  double parameter = 0.0;
  std::string scheme;
  RunSummary summary;
};

struct SweepTable {
  std::string parameter_name;
  std::vector<SweepRow> rows;
  std::vector<ScenarioRun> runs;
};

namespace detail {

inline std::size_t first_c2tcp(const Scenario& s) {
  for (std::size_t i = 0; i < s.flows.size(); ++i) {
    if (s.flows[i].scheme == Scheme::C2tcp) return i;
  }
  throw ConfigError("scenario '" + s.name + "' has no C2TCP flow to sweep");
}

}  // namespace detail

/// One run per Target; every C2TCP flow gets the swept Target. Rows report
/// the first C2TCP flow.
inline SweepTable sweep_target(const Scenario& base, const std::vector<double>& targets_ms, unsigned jobs = 0) {
  if (targets_ms.empty()) throw ConfigError("sweep-target needs at least one Target");
  const auto subject = detail::first_c2tcp(base);
  std::vector<Scenario> runs;
  for (double t : targets_ms) {
    if (!(t > 0)) throw ConfigError("Targets must be positive");
    Scenario s = base;
    for (auto& f : s.flows) {
      if (f.scheme == Scheme::C2tcp) f.target = from_ms(t);
    }
    runs.push_back(std::move(s));
  }
  SweepTable table;
  table.parameter_name = "target_ms";
  table.runs = run_all(runs, jobs);
  for (std::size_t i = 0; i < targets_ms.size(); ++i) {
    table.rows.push_back(SweepRow{targets_ms[i], scheme_name(runs[i].flows[subject]),
                                  table.runs[i].summaries[subject]});
  }
  return table;
}

/// Per buffer size, one run as given and one with each C2TCP flow replaced
/// by its base loss-based flavor. Rows report the first C2TCP flow's slot.
inline SweepTable sweep_buffer(const Scenario& base, const std::vector<std::int64_t>& sizes, unsigned jobs = 0) {
  if (sizes.empty()) throw ConfigError("sweep-buffer needs at least one buffer size");
  const auto subject = detail::first_c2tcp(base);
  std::vector<Scenario> runs;
  for (auto size : sizes) {
    Scenario with = base;
    with.buffer_bytes = size;
    Scenario without = with;
    for (auto& f : without.flows) {
      if (f.scheme == Scheme::C2tcp) {
        f.scheme = f.base == cc::Flavor::Cubic ? Scheme::Cubic : Scheme::NewReno;
        f.label.clear();
      }
    }
    validate(with);
    runs.push_back(std::move(with));
    runs.push_back(std::move(without));
  }
  SweepTable table;
  table.parameter_name = "buffer_bytes";
  table.runs = run_all(runs, jobs);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    table.rows.push_back(SweepRow{static_cast<double>(sizes[i / 2]), scheme_name(runs[i].flows[subject]),
                                  table.runs[i].summaries[subject]});
  }
  return table;
}

struct FairnessOptions {
  double rate_mbps = 24.0;
  Duration base_rtt = std::chrono::milliseconds{20};
  int buffer_packets = 40;
  Duration second_start = std::chrono::seconds{30};
  Duration duration = std::chrono::seconds{90};
  /// Jain index and shares are computed over the last `window` of the run.
  Duration window = std::chrono::seconds{30};
};

struct FairnessResult {
  ScenarioRun run;
  /// Per-second delivered throughput, [flow][second].
  std::vector<std::vector<double>> series_mbps;
  /// Mean throughput of each flow over the final window.
  std::vector<double> window_throughput_mbps;
  /// window throughput / link rate.
  std::vector<double> window_share;
  double jain = 0.0;
};

inline Scenario fairness_scenario(const FlowEntry& a, const FlowEntry& b, const FairnessOptions& opt = {}) {
  Scenario s;
  s.name = "fairness";
  s.duration = opt.duration;
  s.warmup = Duration{0};
  s.trace.constant_mbps = opt.rate_mbps;
  s.buffer_bytes = static_cast<std::int64_t>(opt.buffer_packets) * kOpportunityBytes;
  s.base_rtt = opt.base_rtt;
  s.queue_mode = sim::QueueMode::Shared;
  FlowEntry fa = a;
  FlowEntry fb = b;
  fa.start = Duration{0};
  fb.start = opt.second_start;
  fa.stop.reset();
  fb.stop.reset();
  if (fa.label.empty()) fa.label = "A:" + scheme_name(fa);
  if (fb.label.empty()) fb.label = "B:" + scheme_name(fb);
  s.flows = {fa, fb};
  return s;
}

inline FairnessResult fairness(const FlowEntry& a, const FlowEntry& b, const FairnessOptions& opt = {}) {
  if (opt.window <= Duration{0} || opt.window > opt.duration - opt.second_start) {
    throw ConfigError("fairness window must fit after the second flow starts");
  }
  FairnessResult r;
  r.run = run_scenario(fairness_scenario(a, b, opt));
  const SimTime end = kSimStart + opt.duration;
  const SimTime from = end - opt.window;
  for (std::size_t i = 0; i < r.run.result.flows.size(); ++i) {
    std::vector<double> series;
    for (const auto& sample : r.run.summaries[i].timeseries) series.push_back(sample.throughput_mbps);
    r.series_mbps.push_back(std::move(series));
    std::uint64_t bytes = 0;
    for (const auto& rec : r.run.result.records) {
      if (rec.flow_id == static_cast<int>(i) && rec.delivered_at >= from && rec.delivered_at < end) {
        bytes += static_cast<std::uint64_t>(rec.size_bytes);
      }
    }
    const double mbps = static_cast<double>(bytes) * 8.0 / to_seconds(opt.window) / 1e6;
    r.window_throughput_mbps.push_back(mbps);
    r.window_share.push_back(mbps / opt.rate_mbps);
  }
  r.jain = jain_index(r.window_throughput_mbps);
  return r;
}

}  // namespace c2lab
