// c2lab: command-line front end for scenario runs, sweeps and the fairness
// experiment. Exit codes: 0 success, 1 configuration error, 2 runtime error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "c2lab/harness.hpp"
#include "c2lab/report.hpp"
#include "c2lab/scenario.hpp"
#include "c2lab/trace.hpp"

namespace fs = std::filesystem;
using namespace c2lab;

namespace {

struct OutputOptions {
  std::string out_dir = "out";
  std::string format = "csv";
  bool csv() const { return format == "csv" || format == "all"; }
  bool json() const { return format == "json" || format == "all"; }
};

void add_output_options(CLI::App* cmd, OutputOptions& o) {
  cmd->add_option("--out-dir", o.out_dir, "Directory for result files")->capture_default_str();
  cmd->add_option("--format", o.format, "csv, json or all")
      ->check(CLI::IsMember({"csv", "json", "all"}))
      ->capture_default_str();
}

void print_summary_line(const RunSummary& s) {
  std::printf("  %-28s %8.3f Mbps  queuing %8.2f ms (p95 %8.2f)  e2e %8.2f ms  jitter %6.2f ms\n",
              s.label.c_str(), s.throughput_mbps, s.avg_queuing_delay_ms, s.p95_queuing_delay_ms,
              s.avg_e2e_delay_ms, s.jitter_ms);
}

void write_run(const ScenarioRun& run, const fs::path& dir, const OutputOptions& o) {
  if (o.csv()) {
    report::write_atomic(dir / "packets.csv", report::packets_csv(run.result.records));
    report::write_atomic(dir / "summary.csv", report::summary_csv(run.summaries));
    report::write_atomic(dir / "timeseries.csv", report::timeseries_csv(run));
  }
  if (o.json()) report::write_atomic(dir / "summary.json", report::summary_json(run));
}

void write_sweep(const SweepTable& table, const std::string& stem, const OutputOptions& o) {
  const fs::path dir = o.out_dir;
  if (o.csv()) report::write_atomic(dir / (stem + ".csv"), report::sweep_csv(table));
  if (o.json()) report::write_atomic(dir / (stem + ".json"), report::sweep_json(table));
  for (const auto& r : table.rows) {
    std::printf("  %s=%-10g %-28s %8.3f Mbps  queuing %8.2f ms  e2e %8.2f ms\n", table.parameter_name.c_str(),
                r.parameter, r.scheme.c_str(), r.summary.throughput_mbps, r.summary.avg_queuing_delay_ms,
                r.summary.avg_e2e_delay_ms);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace-driven congestion-control lab"};
  app.require_subcommand(1);

  OutputOptions out;

  std::string scenario_path;
  auto* run_cmd = app.add_subcommand("run", "Run one scenario file");
  run_cmd->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  add_output_options(run_cmd, out);

  std::vector<double> targets;
  unsigned jobs = 0;
  auto* st_cmd = app.add_subcommand("sweep-target", "Vary the C2TCP Target");
  st_cmd->add_option("scenario", scenario_path, "Base scenario")->required();
  st_cmd->add_option("--targets", targets, "Targets in ms")->delimiter(',')->required();
  st_cmd->add_option("--jobs", jobs, "Parallel runs (0: all cores)");
  add_output_options(st_cmd, out);

  std::vector<std::int64_t> sizes;
  auto* sb_cmd = app.add_subcommand("sweep-buffer", "Vary the bottleneck buffer, C2TCP vs its base TCP");
  sb_cmd->add_option("scenario", scenario_path, "Base scenario")->required();
  sb_cmd->add_option("--sizes", sizes, "Buffer sizes in bytes")->delimiter(',')->required();
  sb_cmd->add_option("--jobs", jobs, "Parallel runs (0: all cores)");
  add_output_options(sb_cmd, out);

  std::string scheme_a = "cubic";
  std::string scheme_b = "cubic";
  FairnessOptions fopt;
  double rate = fopt.rate_mbps;
  double rtt_ms = to_ms(fopt.base_rtt);
  double second_start_s = to_seconds(fopt.second_start);
  double duration_s = to_seconds(fopt.duration);
  double window_s = to_seconds(fopt.window);
  auto* fair_cmd = app.add_subcommand("fairness", "Two flows on a shared queue, the second starting later");
  fair_cmd->add_option("--a", scheme_a, "First flow: newreno | cubic | c2tcp[:target_ms[:base]]")
      ->capture_default_str();
  fair_cmd->add_option("--b", scheme_b, "Second flow, same syntax")->capture_default_str();
  fair_cmd->add_option("--rate-mbps", rate, "Constant link rate")->capture_default_str();
  fair_cmd->add_option("--rtt-ms", rtt_ms, "Base RTT")->capture_default_str();
  fair_cmd->add_option("--buffer-packets", fopt.buffer_packets, "Shared queue size in 1500 B packets")
      ->capture_default_str();
  fair_cmd->add_option("--second-start-s", second_start_s, "Start time of the second flow")->capture_default_str();
  fair_cmd->add_option("--duration-s", duration_s, "Run length")->capture_default_str();
  fair_cmd->add_option("--window-s", window_s, "Final window for shares and Jain index")->capture_default_str();
  add_output_options(fair_cmd, out);

  std::string kind = "variable";
  std::string trace_out;
  double gen_rate = 12.0;
  double gen_duration_s = 60.0;
  VariableTraceParams vp;
  double vp_step_ms = to_ms(vp.step);
  auto* gen_cmd = app.add_subcommand("gen-trace", "Write a synthetic link trace");
  gen_cmd->add_option("kind", kind, "constant or variable")
      ->check(CLI::IsMember({"constant", "variable"}))
      ->capture_default_str();
  gen_cmd->add_option("--out", trace_out, "Output trace file")->required();
  gen_cmd->add_option("--rate-mbps", gen_rate, "Constant rate")->capture_default_str();
  gen_cmd->add_option("--duration-s", gen_duration_s, "Trace length")->capture_default_str();
  gen_cmd->add_option("--seed", vp.seed, "Variable trace seed")->capture_default_str();
  gen_cmd->add_option("--min-mbps", vp.min_mbps, "Variable trace floor")->capture_default_str();
  gen_cmd->add_option("--max-mbps", vp.max_mbps, "Variable trace ceiling")->capture_default_str();
  gen_cmd->add_option("--start-mbps", vp.start_mbps, "Variable trace start rate")->capture_default_str();
  gen_cmd->add_option("--step-ms", vp_step_ms, "Rate hold time")->capture_default_str();
  gen_cmd->add_option("--volatility", vp.volatility, "Log-rate step deviation")->capture_default_str();
  gen_cmd->add_option("--reversion", vp.reversion, "Pull toward the mean per step")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run_cmd->parsed()) {
      const auto scenario = load_scenario(scenario_path);
      const auto run = run_scenario(scenario);
      write_run(run, out.out_dir, out);
      std::printf("%s: %zu flows, %.1f s\n", scenario.name.c_str(), scenario.flows.size(),
                  to_seconds(scenario.duration));
      for (const auto& s : run.summaries) print_summary_line(s);
    } else if (st_cmd->parsed()) {
      write_sweep(sweep_target(load_scenario(scenario_path), targets, jobs), "sweep_target", out);
    } else if (sb_cmd->parsed()) {
      write_sweep(sweep_buffer(load_scenario(scenario_path), sizes, jobs), "sweep_buffer", out);
    } else if (fair_cmd->parsed()) {
      fopt.rate_mbps = rate;
      fopt.base_rtt = from_ms(rtt_ms);
      fopt.second_start = from_ms(second_start_s * 1000.0);
      fopt.duration = from_ms(duration_s * 1000.0);
      fopt.window = from_ms(window_s * 1000.0);
      const auto result = fairness(parse_scheme(scheme_a), parse_scheme(scheme_b), fopt);
      const fs::path dir = out.out_dir;
      if (out.csv()) report::write_atomic(dir / "fairness.csv", report::fairness_csv(result));
      if (out.json()) report::write_atomic(dir / "fairness.json", report::fairness_json(result, fopt));
      for (std::size_t i = 0; i < result.window_throughput_mbps.size(); ++i) {
        std::printf("  %-28s last %.0f s: %8.3f Mbps (%.1f%% of link)\n", result.run.summaries[i].label.c_str(),
                    window_s, result.window_throughput_mbps[i], 100.0 * result.window_share[i]);
      }
      std::printf("  Jain index %.4f (%s)\n", result.jain, report::kJainNote);
    } else if (gen_cmd->parsed()) {
      LinkTrace trace;
      const auto duration = from_ms(gen_duration_s * 1000.0);
      if (kind == "constant") {
        trace = gen_constant(gen_rate, duration);
      } else {
        vp.duration = duration;
        vp.step = from_ms(vp_step_ms);
        trace = gen_variable(vp);
      }
      save_trace(trace, trace_out);
      std::printf("%s: %zu opportunities, period %lld ms, mean %.3f Mbps\n", trace_out.c_str(), trace.size(),
                  static_cast<long long>(trace.period_ms()), trace.mean_rate_mbps());
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "c2lab: configuration error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "c2lab: error: %s\n", e.what());
    return 2;
  }
  return 0;
}
