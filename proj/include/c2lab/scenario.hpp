#pragma once

// Scenario files: JSON documents binding a link (trace, buffer, delay, AQM)
// to a set of flows. See docs/scenario-format.md for the schema.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "c2lab/cc/c2tcp.hpp"
#include "c2lab/sim/emulator.hpp"
#include "c2lab/trace.hpp"
#include "c2lab/units.hpp"

namespace c2lab {

inline constexpr int kScenarioSchemaVersion = 1;

enum class Scheme { NewReno, Cubic, C2tcp };

struct TraceSpec {
  /// Mahimahi trace file, relative to the scenario file's directory.
  std::optional<std::string> path;
  /// Alternative: synthetic constant-rate link.
  std::optional<double> constant_mbps;
  int scale = 1;

  bool operator==(const TraceSpec&) const = default;
};

struct FlowEntry {
  Scheme scheme = Scheme::C2tcp;
  /// Loss-based TCP under the overlay (C2TCP only).
  cc::Flavor base = cc::Flavor::Cubic;
  Duration target = std::chrono::milliseconds{50};
  Duration start{0};
  std::optional<Duration> stop;
  std::string label;

  bool operator==(const FlowEntry&) const = default;
};

struct Scenario {
  int schema_version = kScenarioSchemaVersion;
  std::string name = "scenario";
  Duration duration = std::chrono::seconds{60};
  Duration warmup = std::chrono::seconds{2};
  TraceSpec trace;
  std::optional<TraceSpec> uplink;
  std::int64_t buffer_bytes = 150'000;
  Duration base_rtt = std::chrono::milliseconds{20};
  std::int32_t mtu_bytes = 1500;
  sim::Aqm aqm = sim::Aqm::DropTail;
  Duration codel_target = std::chrono::milliseconds{5};
  Duration codel_interval = std::chrono::milliseconds{100};
  sim::QueueMode queue_mode = sim::QueueMode::PerFlow;
  std::vector<FlowEntry> flows;
  /// Directory relative trace paths resolve against. Not serialized.
  std::filesystem::path base_dir;

  bool operator==(const Scenario& o) const {
    return schema_version == o.schema_version && name == o.name && duration == o.duration &&
           warmup == o.warmup && trace == o.trace && uplink == o.uplink &&
           buffer_bytes == o.buffer_bytes && base_rtt == o.base_rtt && mtu_bytes == o.mtu_bytes &&
           aqm == o.aqm && codel_target == o.codel_target && codel_interval == o.codel_interval &&
           queue_mode == o.queue_mode && flows == o.flows;
  }
};

inline std::string scheme_name(const FlowEntry& f) {
  switch (f.scheme) {
    case Scheme::NewReno: return "newreno";
    case Scheme::Cubic: return "cubic";
    case Scheme::C2tcp: {
      std::ostringstream os;
      os << "c2tcp-" << to_string(f.base) << "(" << to_ms(f.target) << "ms)";
      return os.str();
    }
  }
  return "?";
}

inline std::string flow_label(const FlowEntry& f) { return f.label.empty() ? scheme_name(f) : f.label; }

/// Parses "newreno", "cubic", "c2tcp", "c2tcp:<target_ms>" or
/// "c2tcp:<target_ms>:<newreno|cubic>".
inline FlowEntry parse_scheme(const std::string& text) {
  FlowEntry f;
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  if (parts.empty()) throw ConfigError("empty scheme");
  if (parts[0] == "newreno" && parts.size() == 1) {
    f.scheme = Scheme::NewReno;
  } else if (parts[0] == "cubic" && parts.size() == 1) {
    f.scheme = Scheme::Cubic;
  } else if (parts[0] == "c2tcp" && parts.size() <= 3) {
    f.scheme = Scheme::C2tcp;
    if (parts.size() >= 2) {
      double ms = 0;
      try {
        std::size_t used = 0;
        ms = std::stod(parts[1], &used);
        if (used != parts[1].size()) throw std::invalid_argument(parts[1]);
      } catch (const std::exception&) {
        throw ConfigError("bad C2TCP target in scheme '" + text + "'");
      }
      if (!(ms > 0)) throw ConfigError("C2TCP target must be positive in '" + text + "'");
      f.target = from_ms(ms);
    }
    if (parts.size() == 3) {
      if (parts[2] == "newreno") {
        f.base = cc::Flavor::NewReno;
      } else if (parts[2] == "cubic") {
        f.base = cc::Flavor::Cubic;
      } else {
        throw ConfigError("unknown C2TCP base '" + parts[2] + "'");
      }
    }
  } else {
    throw ConfigError("unknown scheme '" + text + "'");
  }
  return f;
}

namespace detail {

using nlohmann::json;

inline double ms_of(Duration d) { return static_cast<double>(d.count()) / 1000.0; }
inline double s_of(Duration d) { return static_cast<double>(d.count()) / 1e6; }

inline Duration read_ms(const json& j, const char* key, Duration fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  return from_ms(j.at(key).get<double>());
}

inline Duration read_s(const json& j, const char* key, Duration fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  return from_ms(j.at(key).get<double>() * 1000.0);
}

inline TraceSpec read_trace_spec(const json& j, const char* what) {
  TraceSpec t;
  if (j.is_string()) {
    t.path = j.get<std::string>();
    return t;
  }
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a path or an object");
  if (j.contains("path")) t.path = j.at("path").get<std::string>();
  if (j.contains("constant_mbps")) t.constant_mbps = j.at("constant_mbps").get<double>();
  if (j.contains("scale")) t.scale = j.at("scale").get<int>();
  if (t.path.has_value() == t.constant_mbps.has_value()) {
    throw ConfigError(std::string(what) + ": give exactly one of 'path' or 'constant_mbps'");
  }
  if (t.scale < 1) throw ConfigError(std::string(what) + ": scale must be >= 1");
  return t;
}

inline json write_trace_spec(const TraceSpec& t) {
  json j = json::object();
  if (t.path) j["path"] = *t.path;
  if (t.constant_mbps) j["constant_mbps"] = *t.constant_mbps;
  j["scale"] = t.scale;
  return j;
}

template <typename Enum>
Enum read_enum(const json& j, const char* key, Enum fallback,
               std::initializer_list<std::pair<const char*, Enum>> names) {
  if (!j.contains(key)) return fallback;
  const auto value = j.at(key).get<std::string>();
  for (const auto& [name, e] : names) {
    if (value == name) return e;
  }
  throw ConfigError(std::string("unknown value '") + value + "' for '" + key + "'");
}

}  // namespace detail

inline void validate(const Scenario& s) {
  if (s.schema_version != kScenarioSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(s.schema_version));
  }
  if (s.duration.count() <= 0) throw ConfigError("duration must be positive");
  if (s.warmup.count() < 0 || s.warmup >= s.duration) throw ConfigError("warmup must be in [0, duration)");
  if (s.flows.empty()) throw ConfigError("scenario needs at least one flow");
  if (s.buffer_bytes < s.mtu_bytes) throw ConfigError("buffer_bytes must be >= mtu_bytes");
  if (s.base_rtt.count() <= 0) throw ConfigError("base_rtt must be positive");
  for (std::size_t i = 0; i < s.flows.size(); ++i) {
    const auto& f = s.flows[i];
    const auto where = "flow " + std::to_string(i) + ": ";
    if (f.start.count() < 0) throw ConfigError(where + "start must be >= 0");
    if (f.start >= s.duration) throw ConfigError(where + "start must precede the end of the run");
    if (f.stop && *f.stop <= f.start) throw ConfigError(where + "stop must be after start");
    if (f.stop && *f.stop > s.duration) throw ConfigError(where + "stop must be <= duration");
    if (f.scheme == Scheme::C2tcp && f.target.count() <= 0) throw ConfigError(where + "target must be positive");
  }
}

inline Scenario parse_scenario(std::string_view text, std::filesystem::path base_dir = {}) {
  using detail::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
  Scenario s;
  s.base_dir = std::move(base_dir);
  try {
    s.schema_version = j.value("schema_version", 0);
    if (s.schema_version != kScenarioSchemaVersion) {
      throw ConfigError("scenario schema_version must be " + std::to_string(kScenarioSchemaVersion));
    }
    s.name = j.value("name", s.name);
    s.duration = detail::read_s(j, "duration_s", s.duration);
    s.warmup = detail::read_s(j, "warmup_s", s.warmup);

    if (!j.contains("link")) throw ConfigError("scenario needs a 'link' section");
    const auto& link = j.at("link");
    if (!link.contains("trace")) throw ConfigError("link needs a 'trace'");
    s.trace = detail::read_trace_spec(link.at("trace"), "link.trace");
    if (link.contains("uplink_trace")) s.uplink = detail::read_trace_spec(link.at("uplink_trace"), "link.uplink_trace");
    s.buffer_bytes = link.value("buffer_bytes", s.buffer_bytes);
    s.base_rtt = detail::read_ms(link, "base_rtt_ms", s.base_rtt);
    s.mtu_bytes = link.value("mtu_bytes", s.mtu_bytes);
    s.aqm = detail::read_enum(link, "aqm", s.aqm, {{"droptail", sim::Aqm::DropTail}, {"codel", sim::Aqm::CoDel}});
    s.codel_target = detail::read_ms(link, "codel_target_ms", s.codel_target);
    s.codel_interval = detail::read_ms(link, "codel_interval_ms", s.codel_interval);
    s.queue_mode = detail::read_enum(link, "queue_mode", s.queue_mode,
                                     {{"per_flow", sim::QueueMode::PerFlow}, {"shared", sim::QueueMode::Shared}});

    if (!j.contains("flows") || !j.at("flows").is_array()) throw ConfigError("scenario needs a 'flows' array");
    for (const auto& jf : j.at("flows")) {
      FlowEntry f;
      f.scheme = detail::read_enum(jf, "cc", Scheme::C2tcp,
                                   {{"newreno", Scheme::NewReno}, {"cubic", Scheme::Cubic}, {"c2tcp", Scheme::C2tcp}});
      f.base = detail::read_enum(jf, "base", f.base, {{"newreno", cc::Flavor::NewReno}, {"cubic", cc::Flavor::Cubic}});
      f.target = detail::read_ms(jf, "target_ms", f.target);
      f.start = detail::read_s(jf, "start_s", f.start);
      if (jf.contains("stop_s")) f.stop = detail::read_s(jf, "stop_s", Duration{0});
      f.label = jf.value("label", std::string{});
      s.flows.push_back(f);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed scenario: ") + e.what());
  }
  validate(s);
  return s;
}

inline std::string serialize_scenario(const Scenario& s) {
  using detail::json;
  json j;
  j["schema_version"] = s.schema_version;
  j["name"] = s.name;
  j["duration_s"] = detail::s_of(s.duration);
  j["warmup_s"] = detail::s_of(s.warmup);
  json link;
  link["trace"] = detail::write_trace_spec(s.trace);
  if (s.uplink) link["uplink_trace"] = detail::write_trace_spec(*s.uplink);
  link["buffer_bytes"] = s.buffer_bytes;
  link["base_rtt_ms"] = detail::ms_of(s.base_rtt);
  link["mtu_bytes"] = s.mtu_bytes;
  link["aqm"] = s.aqm == sim::Aqm::CoDel ? "codel" : "droptail";
  link["codel_target_ms"] = detail::ms_of(s.codel_target);
  link["codel_interval_ms"] = detail::ms_of(s.codel_interval);
  link["queue_mode"] = s.queue_mode == sim::QueueMode::Shared ? "shared" : "per_flow";
  j["link"] = link;
  json flows = json::array();
  for (const auto& f : s.flows) {
    json jf;
    jf["cc"] = f.scheme == Scheme::NewReno ? "newreno" : f.scheme == Scheme::Cubic ? "cubic" : "c2tcp";
    if (f.scheme == Scheme::C2tcp) {
      jf["base"] = std::string(to_string(f.base));
      jf["target_ms"] = detail::ms_of(f.target);
    }
    jf["start_s"] = detail::s_of(f.start);
    if (f.stop) jf["stop_s"] = detail::s_of(*f.stop);
    if (!f.label.empty()) jf["label"] = f.label;
    flows.push_back(jf);
  }
  j["flows"] = flows;
  return j.dump(2) + "\n";
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scenario " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.parent_path());
}

inline LinkTrace resolve_trace(const TraceSpec& spec, const std::filesystem::path& base_dir) {
  LinkTrace trace;
  if (spec.constant_mbps) {
    trace = gen_constant(*spec.constant_mbps, std::chrono::seconds{1});
  } else {
    std::filesystem::path p = *spec.path;
    if (p.is_relative()) p = base_dir / p;
    trace = load_trace(p);
  }
  return spec.scale > 1 ? scale_trace(trace, spec.scale) : trace;
}

inline cc::FlowConfig flow_config(const FlowEntry& f) {
  cc::FlowConfig c;
  switch (f.scheme) {
    case Scheme::NewReno: c.flavor = cc::Flavor::NewReno; break;
    case Scheme::Cubic: c.flavor = cc::Flavor::Cubic; break;
    case Scheme::C2tcp:
      c.flavor = f.base;
      c.c2tcp_target = f.target;
      break;
  }
  return c;
}

inline sim::EmuConfig emu_config(const Scenario& s) {
  sim::EmuConfig e;
  e.trace = resolve_trace(s.trace, s.base_dir);
  if (s.uplink) e.uplink_trace = resolve_trace(*s.uplink, s.base_dir);
  e.buffer_bytes = s.buffer_bytes;
  e.base_rtt = s.base_rtt;
  e.mtu_bytes = s.mtu_bytes;
  e.aqm = s.aqm;
  e.codel_target = s.codel_target;
  e.codel_interval = s.codel_interval;
  e.queue_mode = s.queue_mode;
  return e;
}

inline std::vector<sim::FlowSpec> flow_specs(const Scenario& s) {
  std::vector<sim::FlowSpec> out;
  for (const auto& f : s.flows) {
    sim::FlowSpec spec;
    spec.cc = flow_config(f);
    spec.start_at = kSimStart + f.start;
    if (f.stop) spec.stop_at = kSimStart + *f.stop;
    spec.label = flow_label(f);
    out.push_back(spec);
  }
  return out;
}

}  // namespace c2lab
