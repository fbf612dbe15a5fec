#include "iotc/broker/cluster.hpp"

#include <filesystem>
#include <stdexcept>

#include <sys/wait.h>

namespace iotc::broker {

void ClusterConfig::validate() const {
  if (instances < 1) throw std::invalid_argument("--instances must be at least 1");
  if (index < 0 || index >= instances) {
    throw std::invalid_argument("instance index " + std::to_string(index) + " outside [0, " +
                                std::to_string(instances) + ")");
  }
  if (role == Role::Master && index != 0) throw std::invalid_argument("the master is instance 0");
  if (role == Role::Slave && index == 0) throw std::invalid_argument("a slave cannot be instance 0");
}

std::string self_executable() { return std::filesystem::read_symlink("/proc/self/exe").string(); }

Supervisor::Supervisor(asio::io_context& io, int instances,
                       std::function<std::vector<std::string>(int)> argv_for,
                       std::function<std::string(int)> output_for, EventLog* log,
                       std::chrono::milliseconds restart_delay)
    : io_(io),
      instances_(instances),
      argv_for_(std::move(argv_for)),
      output_for_(std::move(output_for)),
      log_(log),
      restart_delay_(restart_delay),
      timer_(io) {}

Supervisor::~Supervisor() { stop(); }

void Supervisor::spawn(SlaveState& s) {
  s.process = ChildProcess::spawn(argv_for_(s.index), output_for_ ? output_for_(s.index) : std::string());
  s.waiting = false;
  if (log_) log_->emit("slave_started", {{"index", s.index}, {"pid", s.process.pid()}, {"restarts", s.restarts}});
}

void Supervisor::start() {
  slaves_.resize(static_cast<std::size_t>(std::max(0, instances_ - 1)));
  for (int i = 1; i < instances_; ++i) {
    slaves_[i - 1].index = i;
    spawn(slaves_[i - 1]);
  }
  if (!slaves_.empty()) asio::co_spawn(io_, monitor(), asio::detached);
}

void Supervisor::stop() {
  if (stopping_) return;
  stopping_ = true;
  timer_.cancel();
  for (auto& s : slaves_) {
    if (s.process.valid()) s.process.stop();
  }
}

awaitable<void> Supervisor::monitor() {
  error_code ec;
  while (!stopping_) {
    timer_.expires_after(std::chrono::milliseconds(50));
    co_await timer_.async_wait(asio::redirect_error(use_awaitable, ec));
    if (stopping_) break;
    auto now = Clock::now();
    for (auto& s : slaves_) {
      if (s.waiting) {
        if (now >= s.restart_at) {
          ++s.restarts;
          spawn(s);
        }
        continue;
      }
      auto status = s.process.poll();
      if (!status) continue;
      s.last_status = *status;
      bool clean = WIFEXITED(*status) && WEXITSTATUS(*status) == 0;
      if (log_) {
        log_->emit("slave_exited", {{"index", s.index},
                                    {"exit_code", WIFEXITED(*status) ? WEXITSTATUS(*status) : -1},
                                    {"signal", WIFSIGNALED(*status) ? WTERMSIG(*status) : 0}});
      }
      if (!clean) {
        s.waiting = true;
        s.restart_at = now + restart_delay_;
      }
    }
  }
}

int Supervisor::total_restarts() const {
  int n = 0;
  for (const auto& s : slaves_) n += s.restarts;
  return n;
}

std::vector<pid_t> Supervisor::pids() const {
  std::vector<pid_t> out;
  for (const auto& s : slaves_) out.push_back(s.process.pid());
  return out;
}

nlohmann::json Supervisor::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& s : slaves_) {
    arr.push_back({{"index", s.index}, {"pid", s.process.pid()}, {"restarts", s.restarts},
                   {"waiting", s.waiting}});
  }
  return arr;
}

}  // namespace iotc::broker
