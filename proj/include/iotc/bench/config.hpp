#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <sys/types.h>

#include "iotc/common/host_port.hpp"

namespace iotc::bench {

enum class Mode { Http, Mqtt };

std::string_view mode_name(Mode m);
Mode parse_mode(std::string_view s);

// Bad configuration, including a target that cannot be reached before the run
// starts. In-run failures are counted in the report instead.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BenchConfig {
  Mode mode = Mode::Http;
  int clients = 1;
  int duration_s = 180;
  int timeout_s = 10;        // HTTP request timeout; MQTT delivery timeout
  double interval_s = 10.0;  // MQTT publish interval
  HostPort target{"127.0.0.1", 8080};
  int ramp_s = -1;           // -1: 10% of the duration
  std::uint64_t seed = 1;
  int qos = 1;               // MQTT only
  std::string label;         // free text carried into summary.csv
  std::vector<pid_t> cpu_pids;
  int cpu_interval_ms = 500;

  static BenchConfig defaults(Mode m);
  void validate() const;  // throws ConfigError
  int effective_ramp_s() const { return ramp_s < 0 ? duration_s / 10 : ramp_s; }
  double window_s() const { return duration_s - effective_ramp_s(); }
  nlohmann::json to_json() const;
};

// Per-client start offsets (HTTP) or publish phases (MQTT), in milliseconds.
// Depends only on the seed, the client count and the mode.
std::vector<std::int64_t> start_offsets_ms(const BenchConfig& cfg);

}  // namespace iotc::bench
