#include "iotc/broker/bus.hpp"

#include "iotc/slotstore/bus_client.hpp"

namespace iotc::broker {

bool LocalBus::publish(const std::string& topic, const std::string& payload) {
  if (!topics_.count(topic)) return true;
  asio::post(ex_, [this, topic, payload] {
    if (handler_ && topics_.count(topic)) handler_(topic, payload);
  });
  return true;
}

SlotBus::SlotBus(asio::any_io_executor ex, std::vector<HostPort> nodes, std::size_t home)
    : client_(std::make_shared<slotstore::BusClient>(
          std::move(ex), std::move(nodes), home,
          [this](const std::string& topic, const std::string& payload) {
            if (handler_) handler_(topic, payload);
          })) {}

SlotBus::~SlotBus() { client_->stop(); }

void SlotBus::start() { client_->start(); }
void SlotBus::stop() { client_->stop(); }
void SlotBus::subscribe(const std::string& topic) { client_->subscribe(topic); }
void SlotBus::unsubscribe(const std::string& topic) { client_->unsubscribe(topic); }
bool SlotBus::publish(const std::string& topic, const std::string& payload) {
  return client_->publish(topic, payload);
}
bool SlotBus::connected() const { return client_->connected(); }

std::string encode_bus_message(std::uint8_t qos, const std::string& payload) {
  std::string out;
  out.reserve(payload.size() + 1);
  out.push_back(static_cast<char>(qos));
  out += payload;
  return out;
}

bool decode_bus_message(const std::string& wire, std::uint8_t& qos, std::string& payload) {
  if (wire.empty() || static_cast<std::uint8_t>(wire[0]) > 2) return false;
  qos = static_cast<std::uint8_t>(wire[0]);
  payload.assign(wire, 1, std::string::npos);
  return true;
}

}  // namespace iotc::broker
