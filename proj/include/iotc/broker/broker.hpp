#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>

#include <json.hpp>

#include "iotc/broker/bus.hpp"
#include "iotc/broker/subscriptions.hpp"
#include "iotc/common/asio.hpp"
#include "iotc/common/event_log.hpp"
#include "iotc/mqtt/packet.hpp"
#include "iotc/mqtt/qos.hpp"

namespace iotc::broker {

struct BrokerOptions {
  tcp::endpoint listen{asio::ip::make_address("127.0.0.1"), 1883};
  // Used when a client asks for keepalive 0, and before CONNECT arrives.
  std::chrono::seconds keepalive_default{60};
  mqtt::QosPolicy qos;
  std::chrono::milliseconds tick{500};  // keepalive / retry check granularity
  std::size_t max_backlog = 16 * 1024 * 1024;  // per-connection unsent bytes
  int instance = 0;
};

// One MQTT broker instance. Single-threaded: everything runs on the
// io_context it is given, and so does the bus.
class Broker {
 public:
  struct Stats {
    std::uint64_t accepted = 0;
    std::uint64_t connects = 0;
    std::uint64_t displaced = 0;
    std::uint64_t refused_protocol = 0;
    std::uint64_t protocol_errors = 0;
    std::uint64_t keepalive_timeouts = 0;
    std::uint64_t retry_teardowns = 0;
    std::uint64_t disconnects = 0;
    std::uint64_t publishes_received = 0;
    std::uint64_t bus_published = 0;
    std::uint64_t bus_dropped = 0;
    std::uint64_t bus_received = 0;
    std::uint64_t deliveries = 0;
    std::uint64_t delivery_dropped = 0;
    std::uint64_t subscribes = 0;
    std::uint64_t unsubscribes = 0;
  };

  Broker(asio::io_context& io, BrokerOptions opts, MessageBus& bus, EventLog* log = nullptr);
  ~Broker();

  // Throws std::runtime_error naming the port when it cannot listen.
  void start();
  void stop();

  tcp::endpoint local_endpoint() const { return acceptor_.local_endpoint(); }
  const Stats& stats() const { return stats_; }
  nlohmann::json stats_json() const;
  std::size_t live_sessions() const { return by_client_.size(); }
  const SubscriptionTable& subscriptions() const { return table_; }

 private:
  struct Conn;
  using ConnPtr = std::shared_ptr<Conn>;

  awaitable<void> accept_loop();
  awaitable<void> serve(ConnPtr c);
  awaitable<void> writer(ConnPtr c);
  awaitable<void> ticker(ConnPtr c);

  void handle(const ConnPtr& c, mqtt::Packet p);
  void on_connect(const ConnPtr& c, const mqtt::Packet& p);
  void on_subscribe(const ConnPtr& c, const mqtt::Packet& p);
  void on_unsubscribe(const ConnPtr& c, const mqtt::Packet& p);
  void on_bus_message(const std::string& topic, const std::string& wire);
  void apply(const ConnPtr& c, const mqtt::QosStep& step);
  void send(const ConnPtr& c, const mqtt::Packet& p);
  void close(const ConnPtr& c, std::string_view reason, bool graceful = false);
  void emit(std::string_view event, nlohmann::json fields);

  asio::io_context& io_;
  BrokerOptions opts_;
  MessageBus& bus_;
  EventLog* log_;
  tcp::acceptor acceptor_;
  SubscriptionTable table_;
  std::unordered_map<SessionId, ConnPtr> conns_;
  std::unordered_map<std::string, SessionId> by_client_;
  SessionId next_id_ = 1;
  std::uint64_t auto_ids_ = 0;
  bool stopping_ = false;
  Stats stats_;
};

}  // namespace iotc::broker
