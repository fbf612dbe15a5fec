#include "iotc/bench/config.hpp"

#include <cmath>
#include <random>

namespace iotc::bench {

std::string_view mode_name(Mode m) { return m == Mode::Http ? "http" : "mqtt"; }

Mode parse_mode(std::string_view s) {
  if (s == "http") return Mode::Http;
  if (s == "mqtt") return Mode::Mqtt;
  throw ConfigError("unknown mode '" + std::string(s) + "' (expected http or mqtt)");
}

BenchConfig BenchConfig::defaults(Mode m) {
  BenchConfig c;
  c.mode = m;
  if (m == Mode::Http) {
    c.duration_s = 180;
    c.target = {"127.0.0.1", 8080};
  } else {
    c.duration_s = 120;
    c.target = {"127.0.0.1", 1883};
  }
  return c;
}

void BenchConfig::validate() const {
  if (clients < 1) throw ConfigError("clients must be positive");
  if (duration_s < 1) throw ConfigError("duration must be positive");
  if (timeout_s < 1) throw ConfigError("timeout must be positive");
  if (!(interval_s > 0) || !std::isfinite(interval_s)) throw ConfigError("interval must be positive");
  if (effective_ramp_s() >= duration_s) throw ConfigError("ramp must be shorter than the duration");
  if (qos < 0 || qos > 2) throw ConfigError("qos must be 0, 1 or 2");
  if (cpu_interval_ms < 10) throw ConfigError("cpu interval must be at least 10 ms");
  if (target.port == 0) throw ConfigError("target port missing");
}

nlohmann::json BenchConfig::to_json() const {
  return {{"mode", mode_name(mode)},
          {"clients", clients},
          {"duration_s", duration_s},
          {"timeout_s", timeout_s},
          {"interval_s", interval_s},
          {"target", target.str()},
          {"ramp_s", effective_ramp_s()},
          {"seed", seed},
          {"qos", qos},
          {"label", label},
          {"cpu_pids", cpu_pids}};
}

std::vector<std::int64_t> start_offsets_ms(const BenchConfig& cfg) {
  // HTTP clients are staggered over the first second (or the ramp if shorter)
  // so thousands of connects do not land at once. MQTT clients get a random
  // phase within one publish interval.
  std::int64_t span = 0;
  if (cfg.mode == Mode::Http) {
    span = std::min<std::int64_t>(1000, cfg.effective_ramp_s() * 1000);
  } else {
    span = static_cast<std::int64_t>(cfg.interval_s * 1000);
  }
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::int64_t> out(static_cast<std::size_t>(cfg.clients), 0);
  if (span <= 0) return out;
  std::uniform_int_distribution<std::int64_t> d(0, span - 1);
  for (auto& v : out) v = d(rng);
  return out;
}

}  // namespace iotc::bench
