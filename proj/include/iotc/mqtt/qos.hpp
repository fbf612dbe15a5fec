#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "iotc/mqtt/packet.hpp"

namespace iotc::mqtt {

using QosClock = std::chrono::steady_clock;

enum class OutboundStage { AwaitPubAck, AwaitPubRec, AwaitPubComp };

struct OutboundEntry {
  OutboundStage stage = OutboundStage::AwaitPubAck;
  Packet publish;  // as first sent (dup=false)
  int retransmissions = 0;
  QosClock::time_point last_sent{};
};

struct QosPolicy {
  std::chrono::milliseconds ack_timeout{5000};
  int max_retransmissions = 3;
};

// Events driving one side of a session.
struct OutboundPublish {
  std::string topic;
  std::string payload;
  std::uint8_t qos = 0;
};
struct Received {
  Packet packet;
};
struct AckTimeout {
  std::uint16_t packet_id = 0;
};
using QosEvent = std::variant<OutboundPublish, Received, AckTimeout>;

struct QosStep {
  std::vector<Packet> actions;     // to send to the peer, in order
  std::vector<Packet> deliveries;  // inbound publishes to hand to the application
  bool teardown = false;           // retransmission budget exhausted
};

// Per-connection QoS 0/1/2 handshake state. A plain value type: copy it to
// explore alternative event orders.
//
// Outbound: QoS1 waits for PUBACK; QoS2 walks PUBREC -> PUBREL -> PUBCOMP.
// Inbound QoS2 publishes are delivered on first receipt and their id is held
// until PUBREL so that retransmitted publishes are acknowledged but not
// delivered again. Acks for unknown ids are counted and otherwise ignored.
class QosSession {
 public:
  explicit QosSession(QosPolicy policy = {}) : policy_(policy) {}

  QosStep step(const QosEvent& event, QosClock::time_point now = QosClock::now());

  // Outbound ids whose last transmission is older than the ack timeout.
  std::vector<std::uint16_t> due_retries(QosClock::time_point now) const;

  const std::map<std::uint16_t, OutboundEntry>& outbound() const { return outbound_; }
  const std::set<std::uint16_t>& inbound() const { return inbound_; }
  // The id the next outbound QoS>0 publish would receive.
  std::uint16_t next_packet_id() const;
  std::uint64_t unknown_acks() const { return unknown_acks_; }
  const QosPolicy& policy() const { return policy_; }

  // Forces the allocation cursor; used by tests to exercise wraparound.
  void set_next_packet_id(std::uint16_t id) { cursor_ = id == 0 ? 1 : id; }

  bool same_state(const QosSession& other) const;

 private:
  std::uint16_t allocate_id();
  bool id_in_use(std::uint16_t id) const;
  void on_received(const Packet& p, QosStep& out, QosClock::time_point now);

  QosPolicy policy_;
  std::map<std::uint16_t, OutboundEntry> outbound_;
  std::set<std::uint16_t> inbound_;
  std::uint16_t cursor_ = 1;
  std::uint64_t unknown_acks_ = 0;
};

}  // namespace iotc::mqtt
