#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "iotc/common/asio.hpp"
#include "iotc/common/host_port.hpp"

namespace iotc::slotstore {

// Asynchronous pub/sub connection to the store cluster. Talks to one "home"
// node at a time; on disconnect it moves to the next node in the list and
// re-subscribes. Publishing while disconnected drops the message.
class BusClient : public std::enable_shared_from_this<BusClient> {
 public:
  using Handler = std::function<void(const std::string& topic, const std::string& payload)>;

  struct Stats {
    std::uint64_t published = 0;
    std::uint64_t publish_dropped = 0;
    std::uint64_t received = 0;
    std::uint64_t reconnects = 0;
  };

  BusClient(asio::any_io_executor ex, std::vector<HostPort> nodes, std::size_t home, Handler on_message);
  ~BusClient();

  void start();
  void stop();

  void subscribe(const std::string& topic);
  void unsubscribe(const std::string& topic);
  bool publish(const std::string& topic, const std::string& payload);

  bool connected() const;
  const HostPort& current_node() const { return nodes_[current_]; }
  const Stats& stats() const { return stats_; }

 private:
  struct Session;
  awaitable<void> run();

  asio::any_io_executor ex_;
  std::vector<HostPort> nodes_;
  std::size_t current_;
  Handler on_message_;
  std::set<std::string> topics_;
  std::shared_ptr<Session> session_;
  asio::steady_timer retry_;
  bool stopping_ = false;
  Stats stats_;
};

}  // namespace iotc::slotstore
