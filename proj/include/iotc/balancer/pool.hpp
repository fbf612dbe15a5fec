#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "iotc/common/host_port.hpp"

namespace iotc::balancer {

struct Backend {
  std::string id;
  HostPort address;
  int weight = 1;
  std::int64_t active = 0;
  bool healthy = true;
  std::int64_t last_check_ms = 0;

  // bookkeeping
  std::int64_t current = 0;  // smooth WRR accumulator
  std::uint64_t selected = 0;
  std::uint64_t connect_failures = 0;
  int fail_streak = 0;
  int ok_streak = 0;
};

class NoBackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Policy { WeightedRoundRobin, LeastConnections };

// Numeric ids compare as numbers, anything else lexicographically.
bool id_less(const std::string& a, const std::string& b);

// Parses "[pool/]host:port[:weight]". The id is left empty.
struct BackendSpec {
  std::string pool = "default";
  HostPort address;
  int weight = 1;
};
BackendSpec parse_backend_spec(std::string_view text);

// A set of backends behind one mutex: selection and the active-count
// increment happen together.
class BackendPool {
 public:
  BackendPool(std::string name, std::vector<Backend> backends);

  const std::string& name() const { return name_; }
  std::size_t size() const { return backends_.size(); }

  // Picks a healthy backend and increments its active count. `exclude`
  // skips one index (used for the single connect retry). Throws NoBackendError.
  std::size_t acquire(Policy policy, std::optional<std::size_t> exclude = std::nullopt);
  void release(std::size_t index);
  void note_connect_failure(std::size_t index);

  // Two consecutive failures mark a backend unhealthy, two consecutive
  // successes mark it healthy again. Returns true if the flag flipped.
  bool report_health(std::size_t index, bool ok, std::int64_t now_ms);

  Backend snapshot(std::size_t index) const;
  std::vector<Backend> snapshot() const;
  std::int64_t total_active() const;
  nlohmann::json to_json() const;

 private:
  std::size_t wrr_locked(std::optional<std::size_t> exclude);
  std::size_t least_conn_locked(std::optional<std::size_t> exclude);

  std::string name_;
  mutable std::mutex mu_;
  std::vector<Backend> backends_;
};

}  // namespace iotc::balancer
