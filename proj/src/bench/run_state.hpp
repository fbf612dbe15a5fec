#pragma once

#include <chrono>
#include <cstdint>

#include "iotc/bench/report.hpp"
#include "iotc/common/asio.hpp"

namespace iotc::bench::detail {

// Counters shared by every client of one run. Single-threaded: all clients
// run on one io_context.
struct RunState {
  explicit RunState(const BenchConfig& cfg) : cfg(cfg) {
    report.config = cfg;
    report.window_s = cfg.window_s();
    report.per_client_issued.assign(static_cast<std::size_t>(cfg.clients), 0);
  }

  void begin(Clock::time_point now) {
    start = now;
    window_start = now + std::chrono::seconds(cfg.effective_ramp_s());
    end = now + std::chrono::seconds(cfg.duration_s);
  }

  void issue(int client) {
    ++report.issued;
    ++report.per_client_issued[static_cast<std::size_t>(client)];
    ++outstanding;
  }

  void succeed(Clock::time_point done, Clock::duration latency) {
    --outstanding;
    ++report.success;
    auto us = std::chrono::duration_cast<std::chrono::microseconds>(latency).count();
    if (us < 0) us = 0;
    raw_sum_us += static_cast<double>(us);
    if (in_window(done)) {
      ++report.window_success;
      report.latency.record(static_cast<std::uint64_t>(us));
    }
  }

  void fail(Clock::time_point done) {
    --outstanding;
    ++report.failure;
    if (in_window(done)) ++report.window_failure;
  }

  void cut_off() {
    --outstanding;
    ++report.in_flight_at_end;
  }

  void sample_gauge() { report.max_outstanding = std::max(report.max_outstanding, outstanding); }

  bool in_window(Clock::time_point t) const { return t >= window_start && t <= end; }

  MetricsReport finish(Clock::time_point now) {
    report.elapsed_s = std::chrono::duration<double>(now - start).count();
    report.raw_mean_us = report.success ? raw_sum_us / static_cast<double>(report.success) : 0;
    return std::move(report);
  }

  const BenchConfig& cfg;
  MetricsReport report;
  Clock::time_point start{}, window_start{}, end{};
  std::uint64_t outstanding = 0;
  bool stopping = false;
  double raw_sum_us = 0;
};

// Resolves the target and checks that it accepts a TCP connection.
// Throws ConfigError otherwise.
tcp::endpoint probe_target(const HostPort& target, std::chrono::milliseconds timeout);

// Connects with a deadline; returns the error (timed_out on expiry).
awaitable<error_code> connect_within(tcp::socket& s, const tcp::endpoint& ep, Clock::time_point deadline);

}  // namespace iotc::bench::detail
