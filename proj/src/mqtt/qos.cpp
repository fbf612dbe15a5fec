#include "iotc/mqtt/qos.hpp"

#include <stdexcept>

namespace iotc::mqtt {

namespace {

std::uint16_t advance(std::uint16_t id) { return id == 65535 ? 1 : static_cast<std::uint16_t>(id + 1); }

}  // namespace

bool QosSession::id_in_use(std::uint16_t id) const {
  return outbound_.count(id) != 0 || inbound_.count(id) != 0;
}

std::uint16_t QosSession::next_packet_id() const {
  std::uint16_t id = cursor_;
  for (int i = 0; i < 65535; ++i, id = advance(id)) {
    if (!id_in_use(id)) return id;
  }
  return 0;
}

std::uint16_t QosSession::allocate_id() {
  for (int i = 0; i < 65535; ++i) {
    std::uint16_t id = cursor_;
    cursor_ = advance(cursor_);
    if (!id_in_use(id)) return id;
  }
  throw std::runtime_error("no free packet id: 65535 messages in flight");
}

QosStep QosSession::step(const QosEvent& event, QosClock::time_point now) {
  QosStep out;
  if (const auto* pub = std::get_if<OutboundPublish>(&event)) {
    if (pub->qos == 0) {
      out.actions.push_back(Packet::publish(pub->topic, pub->payload, 0));
      return out;
    }
    std::uint16_t id = allocate_id();
    OutboundEntry entry;
    entry.stage = pub->qos == 1 ? OutboundStage::AwaitPubAck : OutboundStage::AwaitPubRec;
    entry.publish = Packet::publish(pub->topic, pub->payload, pub->qos, id);
    entry.last_sent = now;
    out.actions.push_back(entry.publish);
    outbound_.emplace(id, std::move(entry));
  } else if (const auto* rx = std::get_if<Received>(&event)) {
    on_received(rx->packet, out, now);
  } else if (const auto* timeout = std::get_if<AckTimeout>(&event)) {
    auto it = outbound_.find(timeout->packet_id);
    if (it == outbound_.end()) return out;
    OutboundEntry& entry = it->second;
    if (entry.retransmissions >= policy_.max_retransmissions) {
      out.teardown = true;
      return out;
    }
    ++entry.retransmissions;
    entry.last_sent = now;
    if (entry.stage == OutboundStage::AwaitPubComp) {
      out.actions.push_back(Packet::ack(PacketType::PubRel, it->first));
    } else {
      Packet again = entry.publish;
      again.dup = true;
      out.actions.push_back(std::move(again));
    }
  }
  return out;
}

void QosSession::on_received(const Packet& p, QosStep& out, QosClock::time_point now) {
  switch (p.type) {
    case PacketType::Publish: {
      if (p.qos == 0) {
        out.deliveries.push_back(p);
      } else if (p.qos == 1) {
        out.actions.push_back(Packet::ack(PacketType::PubAck, *p.packet_id));
        out.deliveries.push_back(p);
      } else {
        bool first = inbound_.insert(*p.packet_id).second;
        out.actions.push_back(Packet::ack(PacketType::PubRec, *p.packet_id));
        if (first) out.deliveries.push_back(p);
      }
      return;
    }
    case PacketType::PubAck: {
      auto it = outbound_.find(*p.packet_id);
      if (it != outbound_.end() && it->second.stage == OutboundStage::AwaitPubAck) {
        outbound_.erase(it);
      } else {
        ++unknown_acks_;
      }
      return;
    }
    case PacketType::PubRec: {
      auto it = outbound_.find(*p.packet_id);
      if (it == outbound_.end() || it->second.stage == OutboundStage::AwaitPubAck) {
        ++unknown_acks_;
        return;
      }
      // A repeated PUBREC while awaiting PUBCOMP means our PUBREL was lost.
      it->second.stage = OutboundStage::AwaitPubComp;
      it->second.last_sent = now;
      out.actions.push_back(Packet::ack(PacketType::PubRel, *p.packet_id));
      return;
    }
    case PacketType::PubRel: {
      // PUBCOMP is owed even for an unknown id: our earlier PUBCOMP may have
      // been lost after the id was released.
      if (inbound_.erase(*p.packet_id) == 0) ++unknown_acks_;
      out.actions.push_back(Packet::ack(PacketType::PubComp, *p.packet_id));
      return;
    }
    case PacketType::PubComp: {
      auto it = outbound_.find(*p.packet_id);
      if (it != outbound_.end() && it->second.stage == OutboundStage::AwaitPubComp) {
        outbound_.erase(it);
      } else {
        ++unknown_acks_;
      }
      return;
    }
    default:
      return;
  }
}

std::vector<std::uint16_t> QosSession::due_retries(QosClock::time_point now) const {
  std::vector<std::uint16_t> ids;
  for (const auto& [id, entry] : outbound_) {
    if (now - entry.last_sent >= policy_.ack_timeout) ids.push_back(id);
  }
  return ids;
}

bool QosSession::same_state(const QosSession& other) const {
  if (inbound_ != other.inbound_ || outbound_.size() != other.outbound_.size()) return false;
  for (const auto& [id, entry] : outbound_) {
    auto it = other.outbound_.find(id);
    if (it == other.outbound_.end() || it->second.stage != entry.stage) return false;
  }
  return next_packet_id() == other.next_packet_id();
}

}  // namespace iotc::mqtt
