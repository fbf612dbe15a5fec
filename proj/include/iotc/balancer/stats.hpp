#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "iotc/balancer/pool.hpp"
#include "iotc/common/asio.hpp"

namespace iotc::balancer {

// {"mode", "pools": {name: [backend...]}, "totals": {...}, "proxy": {...}}
nlohmann::json balancer_stats(std::string_view mode, const std::vector<const BackendPool*>& pools,
                              const nlohmann::json& proxy);

// Minimal admin socket: answers any HTTP request (or a bare connection that
// sends a line) with the current JSON snapshot and closes.
class AdminServer {
 public:
  AdminServer(asio::io_context& io, tcp::endpoint listen, std::function<nlohmann::json()> source);
  ~AdminServer();
  void start();
  void stop();
  tcp::endpoint local_endpoint() const { return acceptor_.local_endpoint(); }

 private:
  awaitable<void> accept_loop();
  awaitable<void> answer(tcp::socket socket);

  asio::io_context& io_;
  tcp::endpoint listen_;
  std::function<nlohmann::json()> source_;
  tcp::acceptor acceptor_;
  bool stopping_ = false;
};

}  // namespace iotc::balancer
