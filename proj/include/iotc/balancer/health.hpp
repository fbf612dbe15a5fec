#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "iotc/balancer/pool.hpp"
#include "iotc/common/asio.hpp"
#include "iotc/common/event_log.hpp"

namespace iotc::balancer {

enum class ProbeKind { Tcp, Http };

struct HealthOptions {
  ProbeKind kind = ProbeKind::Tcp;
  std::chrono::milliseconds interval{2000};
  std::chrono::milliseconds timeout{1000};
  std::string path = "/health";
};

// One probe: a TCP connect, or GET <path> expecting 200.
awaitable<bool> probe_backend(HostPort target, HealthOptions opts);

// Probes every backend of every pool on a fixed interval and feeds the
// results into the pool's 2-strike health state.
class HealthChecker {
 public:
  HealthChecker(asio::io_context& io, std::vector<BackendPool*> pools, HealthOptions opts,
                EventLog* log = nullptr);
  void start();
  void stop();
  std::uint64_t probes() const { return probes_; }

 private:
  awaitable<void> run(BackendPool* pool, std::size_t index, asio::steady_timer* timer);

  asio::io_context& io_;
  std::vector<BackendPool*> pools_;
  HealthOptions opts_;
  EventLog* log_;
  std::vector<std::unique_ptr<asio::steady_timer>> timers_;
  bool stopping_ = false;
  std::uint64_t probes_ = 0;
};

std::int64_t wall_ms();

}  // namespace iotc::balancer
