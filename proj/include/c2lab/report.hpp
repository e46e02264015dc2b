#pragma once

// CSV and JSON renderings of run results. Column names and units are listed
// in docs/output-format.md. Every writer is a pure function of its input, so
// repeated runs produce byte-identical files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "c2lab/harness.hpp"

namespace c2lab::report {

inline constexpr const char* kWarmupNote = "first warmup_s seconds of each flow excluded from averages";
inline constexpr const char* kJitterNote = "jitter_ms is computed on e2e delay; queuing_jitter_ms on queuing delay";
inline constexpr const char* kJainNote = "Jain index thresholds are a proxy for qualitative fairness";

inline std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string{}; }

/// Quotes a CSV field if needed.
inline std::string field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Writes through a temporary file and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string packets_csv(const std::vector<PacketRecord>& records) {
  std::ostringstream os;
  os << "flow,seq,sent_at_us,delivered_at_us,queuing_us,e2e_rtt_us\n";
  for (const auto& r : records) {
    os << r.flow_id << ',' << r.seq << ',' << to_us(r.sent_at) << ',' << to_us(r.delivered_at) << ','
       << r.queuing_delay.count() << ',';
    if (r.e2e_rtt) os << r.e2e_rtt->count();
    os << '\n';
  }
  return os.str();
}

inline constexpr const char* kSummaryHeader =
    "flow,label,throughput_mbps,avg_queuing_delay_ms,p95_queuing_delay_ms,avg_e2e_delay_ms,p95_e2e_delay_ms,"
    "jitter_ms,queuing_jitter_ms,utilization,delivered_packets,sent_packets,loss_count,warmup_s,measured_s,"
    "final_alpha,final_setpoint_ms,minrtt_ms";

inline std::string summary_fields(const RunSummary& s) {
  std::ostringstream os;
  os << s.flow_id << ',' << field(s.label) << ',' << num(s.throughput_mbps) << ',' << num(s.avg_queuing_delay_ms)
     << ',' << num(s.p95_queuing_delay_ms) << ',' << num(s.avg_e2e_delay_ms) << ',' << num(s.p95_e2e_delay_ms)
     << ',' << num(s.jitter_ms) << ',' << num(s.queuing_jitter_ms) << ',' << num(s.utilization) << ','
     << s.delivered_packets << ',' << s.sent_packets << ',' << s.loss_count << ',' << num(s.warmup_s) << ','
     << num(s.measured_s) << ',' << opt_num(s.final_alpha) << ',' << opt_num(s.final_setpoint_ms) << ','
     << opt_num(s.minrtt_ms);
  return os.str();
}

inline std::string summary_csv(const std::vector<RunSummary>& summaries) {
  std::string out = std::string(kSummaryHeader) + "\n";
  for (const auto& s : summaries) out += summary_fields(s) + "\n";
  return out;
}

inline nlohmann::ordered_json summary_to_json(const RunSummary& s, bool with_series = true) {
  nlohmann::ordered_json j;
  j["flow"] = s.flow_id;
  j["label"] = s.label;
  j["throughput_mbps"] = s.throughput_mbps;
  j["avg_queuing_delay_ms"] = s.avg_queuing_delay_ms;
  j["p95_queuing_delay_ms"] = s.p95_queuing_delay_ms;
  j["avg_e2e_delay_ms"] = s.avg_e2e_delay_ms;
  j["p95_e2e_delay_ms"] = s.p95_e2e_delay_ms;
  j["jitter_ms"] = s.jitter_ms;
  j["queuing_jitter_ms"] = s.queuing_jitter_ms;
  j["utilization"] = s.utilization;
  j["delivered_packets"] = s.delivered_packets;
  j["sent_packets"] = s.sent_packets;
  j["loss_count"] = s.loss_count;
  j["warmup_s"] = s.warmup_s;
  j["measured_s"] = s.measured_s;
  j["final_alpha"] = s.final_alpha ? nlohmann::ordered_json(*s.final_alpha) : nlohmann::ordered_json(nullptr);
  j["final_setpoint_ms"] =
      s.final_setpoint_ms ? nlohmann::ordered_json(*s.final_setpoint_ms) : nlohmann::ordered_json(nullptr);
  j["minrtt_ms"] = s.minrtt_ms ? nlohmann::ordered_json(*s.minrtt_ms) : nlohmann::ordered_json(nullptr);
  if (with_series) {
    auto series = nlohmann::ordered_json::array();
    for (const auto& p : s.timeseries) {
      series.push_back({{"t_s", p.t_s},
                        {"throughput_mbps", p.throughput_mbps},
                        {"avg_queuing_delay_ms", p.avg_queuing_delay_ms}});
    }
    j["timeseries"] = series;
  }
  return j;
}

inline std::string summary_json(const ScenarioRun& run) {
  nlohmann::ordered_json j;
  j["scenario"] = run.scenario.name;
  j["duration_s"] = to_seconds(run.result.duration);
  j["warmup_note"] = kWarmupNote;
  j["jitter_note"] = kJitterNote;
  auto flows = nlohmann::ordered_json::array();
  for (const auto& s : run.summaries) flows.push_back(summary_to_json(s));
  j["flows"] = flows;
  j["capacity_mbps"] = run.capacity_mbps;
  return j.dump(2) + "\n";
}

/// Long-format per-second series: one row per (second, flow), including the
/// aggregate flow -1, with the link capacity in that second.
inline std::string timeseries_csv(const ScenarioRun& run) {
  std::ostringstream os;
  os << "t_s,flow,label,throughput_mbps,avg_queuing_delay_ms,capacity_mbps\n";
  for (const auto& s : run.summaries) {
    for (std::size_t i = 0; i < s.timeseries.size(); ++i) {
      const auto& p = s.timeseries[i];
      const double cap = i < run.capacity_mbps.size() ? run.capacity_mbps[i] : 0.0;
      os << num(p.t_s) << ',' << s.flow_id << ',' << field(s.label) << ',' << num(p.throughput_mbps) << ','
         << num(p.avg_queuing_delay_ms) << ',' << num(cap) << '\n';
    }
  }
  return os.str();
}

inline std::string sweep_csv(const SweepTable& t) {
  std::string out = t.parameter_name + ",scheme," + kSummaryHeader + "\n";
  for (const auto& r : t.rows) out += num(r.parameter) + "," + field(r.scheme) + "," + summary_fields(r.summary) + "\n";
  return out;
}

inline std::string sweep_json(const SweepTable& t) {
  nlohmann::ordered_json j;
  j["parameter"] = t.parameter_name;
  j["warmup_note"] = kWarmupNote;
  j["jitter_note"] = kJitterNote;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : t.rows) {
    nlohmann::ordered_json row;
    row[t.parameter_name] = r.parameter;
    row["scheme"] = r.scheme;
    row["summary"] = summary_to_json(r.summary, false);
    rows.push_back(row);
  }
  j["rows"] = rows;
  return j.dump(2) + "\n";
}

inline std::string fairness_csv(const FairnessResult& f) {
  std::ostringstream os;
  os << "t_s";
  for (std::size_t i = 0; i < f.series_mbps.size(); ++i) os << ",flow" << i << "_mbps";
  os << '\n';
  const std::size_t n = f.series_mbps.empty() ? 0 : f.series_mbps.front().size();
  for (std::size_t t = 0; t < n; ++t) {
    os << t;
    for (const auto& s : f.series_mbps) os << ',' << num(t < s.size() ? s[t] : 0.0);
    os << '\n';
  }
  return os.str();
}

inline std::string fairness_json(const FairnessResult& f, const FairnessOptions& opt) {
  nlohmann::ordered_json j;
  j["rate_mbps"] = opt.rate_mbps;
  j["base_rtt_ms"] = to_ms(opt.base_rtt);
  j["buffer_packets"] = opt.buffer_packets;
  j["second_start_s"] = to_seconds(opt.second_start);
  j["duration_s"] = to_seconds(opt.duration);
  j["window_s"] = to_seconds(opt.window);
  auto flows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < f.window_throughput_mbps.size(); ++i) {
    flows.push_back({{"flow", i},
                     {"label", f.run.summaries[i].label},
                     {"window_throughput_mbps", f.window_throughput_mbps[i]},
                     {"window_share", f.window_share[i]}});
  }
  j["flows"] = flows;
  j["jain_index"] = f.jain;
  j["jain_note"] = kJainNote;
  return j.dump(2) + "\n";
}

}  // namespace c2lab::report
