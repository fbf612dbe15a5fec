#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "iotc/bench/cpu.hpp"
#include "iotc/bench/load.hpp"
#include "iotc/bench/report.hpp"

using namespace iotc;

int main(int argc, char** argv) {
  CLI::App app{"closed-loop load generator"};
  std::string mode_text, target, out, label;
  int clients = 1, duration = -1, timeout = 10, ramp = -1, qos = 1, cpu_interval = 500;
  double interval = 10;
  std::uint64_t seed = 1;
  std::vector<int> cpu_pids;
  app.add_option("mode", mode_text, "http | mqtt")->required();
  app.add_option("--clients", clients, "concurrent clients")->capture_default_str();
  app.add_option("--duration", duration, "run length in seconds (http 180, mqtt 120)");
  app.add_option("--timeout", timeout, "seconds before an operation counts as failed")->capture_default_str();
  app.add_option("--interval", interval, "mqtt publish interval in seconds")->capture_default_str();
  app.add_option("--ramp", ramp, "seconds excluded from the measurement window (default 10% of duration)");
  app.add_option("--target", target, "host:port (http :8080, mqtt :1883)");
  app.add_option("--out", out, "directory for summary.csv, latency_hist.csv, cpu_series.csv");
  app.add_option("--seed", seed, "schedule seed")->capture_default_str();
  app.add_option("--qos", qos, "mqtt publish and subscribe qos")->capture_default_str();
  app.add_option("--label", label, "series name for the plots");
  app.add_option("--cpu-pid", cpu_pids, "process to sample CPU for (repeatable)");
  app.add_option("--cpu-interval", cpu_interval, "CPU sampling interval in ms")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    auto mode = bench::parse_mode(mode_text);
    auto cfg = bench::BenchConfig::defaults(mode);
    cfg.clients = clients;
    if (duration > 0) cfg.duration_s = duration;
    cfg.timeout_s = timeout;
    cfg.interval_s = interval;
    cfg.ramp_s = ramp;
    if (!target.empty()) cfg.target = parse_host_port(target);
    cfg.seed = seed;
    cfg.qos = qos;
    cfg.label = label;
    cfg.cpu_pids.assign(cpu_pids.begin(), cpu_pids.end());
    cfg.cpu_interval_ms = cpu_interval;
    cfg.validate();
    if (!out.empty()) std::filesystem::create_directories(out);

    bench::CpuSampler sampler(cfg.cpu_pids, std::chrono::milliseconds(cfg.cpu_interval_ms));
    sampler.start();
    auto report = bench::run_load(cfg);
    report.cpu = sampler.stop();
    if (!out.empty()) bench::emit_report(report, out);
    std::cout << report.to_json().dump() << std::endl;
  } catch (const bench::ConfigError& e) {
    std::cerr << "bench: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "bench: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
