#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "iotc/common/asio.hpp"
#include "iotc/common/event_log.hpp"
#include "iotc/common/process.hpp"

namespace iotc::broker {

enum class Role { Master, Slave };

struct ClusterConfig {
  Role role = Role::Master;
  int instances = 1;
  int index = 0;
  void validate() const;  // throws std::invalid_argument
};

// Master-side supervision of the slave processes. `argv_for(i)` builds the
// command line of slave i (1 <= i < instances).
class Supervisor {
 public:
  struct SlaveState {
    int index = 0;
    ChildProcess process;
    int restarts = 0;
    bool waiting = false;  // exited, restart pending
    Clock::time_point restart_at{};
    int last_status = 0;
  };

  Supervisor(asio::io_context& io, int instances, std::function<std::vector<std::string>(int)> argv_for,
             std::function<std::string(int)> output_for = {}, EventLog* log = nullptr,
             std::chrono::milliseconds restart_delay = std::chrono::milliseconds(500));
  ~Supervisor();

  void start();
  // Terminates every slave (SIGTERM, then SIGKILL after the grace period).
  void stop();

  int total_restarts() const;
  std::vector<pid_t> pids() const;
  nlohmann::json to_json() const;

 private:
  void spawn(SlaveState& s);
  awaitable<void> monitor();

  asio::io_context& io_;
  int instances_;
  std::function<std::vector<std::string>(int)> argv_for_;
  std::function<std::string(int)> output_for_;
  EventLog* log_;
  std::chrono::milliseconds restart_delay_;
  std::vector<SlaveState> slaves_;
  asio::steady_timer timer_;
  bool stopping_ = false;
};

// Path of the running executable (for re-exec as a slave).
std::string self_executable();

}  // namespace iotc::broker
