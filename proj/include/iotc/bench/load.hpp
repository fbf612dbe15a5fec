#pragma once

#include "iotc/bench/config.hpp"
#include "iotc/bench/report.hpp"

namespace iotc::bench {

// Closed-loop HTTP load: each client keeps one keep-alive connection and at
// most one outstanding GET /bench/page. Throws ConfigError if the target
// cannot be reached before the run starts.
MetricsReport run_http_load(const BenchConfig& cfg);

// MQTT loopback load: client i subscribes to bench/<i> and publishes its send
// time to it every interval, with at most one message outstanding. Throws
// ConfigError if the broker cannot be reached before the run starts.
MetricsReport run_mqtt_load(const BenchConfig& cfg);

MetricsReport run_load(const BenchConfig& cfg);

}  // namespace iotc::bench
