#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <unordered_map>

#include <json.hpp>

#include "iotc/balancer/pool.hpp"
#include "iotc/common/asio.hpp"
#include "iotc/common/event_log.hpp"

namespace iotc::balancer {

struct TcpProxyOptions {
  std::chrono::milliseconds connect_timeout{2000};
  std::size_t buffer_size = 64 * 1024;
};

// Accepts clients and splices each one to the least-connected healthy backend
// for its whole lifetime.
class TcpProxy {
 public:
  struct Stats {
    std::uint64_t accepted = 0;
    std::uint64_t active = 0;
    std::uint64_t completed = 0;
    std::uint64_t refused = 0;  // no healthy backend, or both connect attempts failed
    std::uint64_t connect_failures = 0;
    std::uint64_t retries = 0;
    std::uint64_t bytes_up = 0;
    std::uint64_t bytes_down = 0;
  };

  TcpProxy(asio::io_context& io, tcp::endpoint listen, BackendPool& pool, TcpProxyOptions opts = {},
           EventLog* log = nullptr);
  ~TcpProxy();

  void start();
  void stop();
  tcp::endpoint local_endpoint() const { return acceptor_.local_endpoint(); }
  const Stats& stats() const { return stats_; }
  nlohmann::json stats_json() const;

 private:
  struct Session;
  awaitable<void> accept_loop();
  awaitable<void> handle(tcp::socket client);
  awaitable<void> pump(std::shared_ptr<Session> s, bool upstream);
  void finish(Session& s);

  asio::io_context& io_;
  tcp::endpoint listen_;
  BackendPool& pool_;
  TcpProxyOptions opts_;
  EventLog* log_;
  tcp::acceptor acceptor_;
  std::unordered_map<std::uint64_t, std::weak_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
  bool stopping_ = false;
  Stats stats_;
};

}  // namespace iotc::balancer
