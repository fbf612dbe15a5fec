#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iotc/bench/config.hpp"
#include "iotc/bench/cpu.hpp"
#include "iotc/bench/histogram.hpp"

namespace iotc::bench {

struct MetricsReport {
  BenchConfig config;

  // Every operation issued during the run ends up in exactly one of these.
  std::uint64_t issued = 0;
  std::uint64_t success = 0;
  std::uint64_t failure = 0;
  std::uint64_t in_flight_at_end = 0;

  // Completions inside the measurement window (after the ramp).
  std::uint64_t window_success = 0;
  std::uint64_t window_failure = 0;
  Histogram latency;    // window samples, microseconds
  double raw_mean_us = 0;  // over every success
  double window_s = 0;
  double elapsed_s = 0;

  std::uint64_t max_outstanding = 0;  // sampled every 100 ms
  std::uint64_t reconnects = 0;
  std::uint64_t client_failures = 0;  // MQTT connect/subscribe rejections
  std::uint64_t duplicates = 0;       // MQTT: late or repeated deliveries
  std::uint64_t foreign = 0;          // MQTT: deliveries on another client's topic
  std::uint64_t skipped_ticks = 0;    // MQTT: publish slots missed while waiting
  std::vector<std::uint64_t> per_client_issued;

  std::vector<CpuSample> cpu;

  bool conserved() const { return success + failure + in_flight_at_end == issued; }
  double throughput() const { return window_s > 0 ? static_cast<double>(window_success) / window_s : 0; }
  double raw_throughput() const { return elapsed_s > 0 ? static_cast<double>(success) / elapsed_s : 0; }
  double mean_latency_us() const { return latency.mean(); }
  nlohmann::json to_json() const;
};

// One row of summary.csv.
struct SummaryRow {
  int run = 0;
  std::string mode;
  std::string label;
  int clients = 0;
  int duration_s = 0;
  int ramp_s = 0;
  std::uint64_t seed = 0;
  int qos = 0;
  std::uint64_t issued = 0;
  std::uint64_t success = 0;
  std::uint64_t failure = 0;
  std::uint64_t in_flight = 0;
  double mean_latency_us = 0;
  double throughput = 0;
  double raw_throughput = 0;
  double mean_cpu = 0;
  friend bool operator==(const SummaryRow&, const SummaryRow&) = default;
};

struct HistRow {
  int run = 0;
  std::uint64_t lower_us = 0;
  std::uint64_t upper_us = 0;
  std::uint64_t count = 0;
  friend bool operator==(const HistRow&, const HistRow&) = default;
};

struct CpuRow {
  int run = 0;
  CpuSample sample;
  friend bool operator==(const CpuRow&, const CpuRow&) = default;
};

SummaryRow summarize(const MetricsReport& r, int run);

std::vector<SummaryRow> read_summary(const std::filesystem::path& dir);
std::vector<HistRow> read_histograms(const std::filesystem::path& dir);
std::vector<CpuRow> read_cpu_series(const std::filesystem::path& dir);

// Appends the run to summary.csv, latency_hist.csv and cpu_series.csv under
// `dir` (creating them with headers) and writes plot_bench.py. Each file is
// written to a temporary name and renamed; on failure nothing is left
// half-written. Returns the run number given to this report.
int emit_report(const MetricsReport& r, const std::filesystem::path& dir);

// Writes header-only CSVs and the plot script.
void emit_empty(const std::filesystem::path& dir);

inline constexpr const char* kPlotScript = "plot_bench.py";

}  // namespace iotc::bench
