#pragma once

#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "iotc/common/asio.hpp"
#include "iotc/common/host_port.hpp"

namespace iotc::slotstore {
class BusClient;
}

namespace iotc::broker {

// The channel between broker instances. A publish reaches every instance that
// subscribed the topic, the publishing one included.
class MessageBus {
 public:
  using Handler = std::function<void(const std::string& topic, const std::string& payload)>;
  virtual ~MessageBus() = default;
  virtual void set_handler(Handler h) = 0;
  virtual void start() {}
  virtual void stop() {}
  virtual void subscribe(const std::string& topic) = 0;
  virtual void unsubscribe(const std::string& topic) = 0;
  // False when the message was dropped (bus unavailable).
  virtual bool publish(const std::string& topic, const std::string& payload) = 0;
  virtual bool connected() const { return true; }
};

// Single-process loopback. Delivery is posted, never re-entrant.
class LocalBus : public MessageBus {
 public:
  explicit LocalBus(asio::any_io_executor ex) : ex_(std::move(ex)) {}
  void set_handler(Handler h) override { handler_ = std::move(h); }
  void subscribe(const std::string& topic) override { topics_.insert(topic); }
  void unsubscribe(const std::string& topic) override { topics_.erase(topic); }
  bool publish(const std::string& topic, const std::string& payload) override;

 private:
  asio::any_io_executor ex_;
  Handler handler_;
  std::set<std::string> topics_;
};

// Slot-store pub/sub through one home node.
class SlotBus : public MessageBus {
 public:
  SlotBus(asio::any_io_executor ex, std::vector<HostPort> nodes, std::size_t home);
  ~SlotBus() override;
  void set_handler(Handler h) override { handler_ = std::move(h); }
  void start() override;
  void stop() override;
  void subscribe(const std::string& topic) override;
  void unsubscribe(const std::string& topic) override;
  bool publish(const std::string& topic, const std::string& payload) override;
  bool connected() const override;
  const slotstore::BusClient& client() const { return *client_; }

 private:
  Handler handler_;
  std::shared_ptr<slotstore::BusClient> client_;
};

// Bus payload: one qos byte, then the application payload.
std::string encode_bus_message(std::uint8_t qos, const std::string& payload);
bool decode_bus_message(const std::string& wire, std::uint8_t& qos, std::string& payload);

}  // namespace iotc::broker
