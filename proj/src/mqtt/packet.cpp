#include "iotc/mqtt/packet.hpp"

#include <sstream>

namespace iotc::mqtt {

std::string_view to_string(PacketType type) {
  switch (type) {
    case PacketType::Connect: return "CONNECT";
    case PacketType::ConnAck: return "CONNACK";
    case PacketType::Publish: return "PUBLISH";
    case PacketType::PubAck: return "PUBACK";
    case PacketType::PubRec: return "PUBREC";
    case PacketType::PubRel: return "PUBREL";
    case PacketType::PubComp: return "PUBCOMP";
    case PacketType::Subscribe: return "SUBSCRIBE";
    case PacketType::SubAck: return "SUBACK";
    case PacketType::Unsubscribe: return "UNSUBSCRIBE";
    case PacketType::UnsubAck: return "UNSUBACK";
    case PacketType::PingReq: return "PINGREQ";
    case PacketType::PingResp: return "PINGRESP";
    case PacketType::Disconnect: return "DISCONNECT";
  }
  return "UNKNOWN";
}

Packet Packet::connect_packet(std::string client_id, std::uint16_t keepalive) {
  Packet p;
  p.type = PacketType::Connect;
  p.connect.client_id = std::move(client_id);
  p.connect.keepalive = keepalive;
  return p;
}

Packet Packet::connack(std::uint8_t code, bool session_present) {
  Packet p;
  p.type = PacketType::ConnAck;
  p.return_code = code;
  p.session_present = session_present;
  return p;
}

Packet Packet::publish(std::string topic, std::string payload, std::uint8_t qos,
                       std::optional<std::uint16_t> id, bool dup) {
  Packet p;
  p.type = PacketType::Publish;
  p.topic = std::move(topic);
  p.payload = std::move(payload);
  p.qos = qos;
  p.packet_id = id;
  p.dup = dup;
  return p;
}

Packet Packet::ack(PacketType type, std::uint16_t id) {
  Packet p;
  p.type = type;
  p.packet_id = id;
  return p;
}

Packet Packet::subscribe(std::uint16_t id, std::vector<TopicRequest> topics) {
  Packet p;
  p.type = PacketType::Subscribe;
  p.packet_id = id;
  p.topics = std::move(topics);
  return p;
}

Packet Packet::suback(std::uint16_t id, std::vector<std::uint8_t> codes) {
  Packet p;
  p.type = PacketType::SubAck;
  p.packet_id = id;
  p.return_codes = std::move(codes);
  return p;
}

Packet Packet::unsubscribe(std::uint16_t id, std::vector<std::string> topics) {
  Packet p;
  p.type = PacketType::Unsubscribe;
  p.packet_id = id;
  for (auto& t : topics) p.topics.push_back({std::move(t), 0});
  return p;
}

Packet Packet::simple(PacketType type) {
  Packet p;
  p.type = type;
  return p;
}

namespace {

// Returns false on malformed sequences, overlong forms, surrogates and U+0000.
bool is_wellformed_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    if (c == 0) return false;
    if (c < 0x80) {
      ++i;
      continue;
    }
    std::size_t len;
    std::uint32_t cp;
    if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += len;
  }
  return true;
}

}  // namespace

std::optional<std::string> topic_name_error(std::string_view topic) {
  if (topic.empty()) return "empty topic";
  if (topic.size() > kMaxStringLength) return "topic longer than 65535 bytes";
  if (topic.find_first_of("+#") != std::string_view::npos) return "wildcards are not supported";
  if (!is_wellformed_utf8(topic)) return "topic is not well-formed UTF-8";
  return std::nullopt;
}

bool requires_packet_id(const Packet& p) {
  switch (p.type) {
    case PacketType::Publish: return p.qos > 0;
    case PacketType::PubAck:
    case PacketType::PubRec:
    case PacketType::PubRel:
    case PacketType::PubComp:
    case PacketType::Subscribe:
    case PacketType::SubAck:
    case PacketType::Unsubscribe:
    case PacketType::UnsubAck: return true;
    default: return false;
  }
}

std::optional<std::string> packet_error(const Packet& p) {
  auto type_value = static_cast<unsigned>(p.type);
  if (type_value < 1 || type_value > 14) return "unknown packet type";
  if (p.retain) return "retained messages are not supported";
  if (p.qos > 2) return "qos must be 0, 1 or 2";
  if (p.type != PacketType::Publish && (p.qos != 0 || p.dup)) {
    return "qos/dup only apply to PUBLISH";
  }
  if (requires_packet_id(p) != p.packet_id.has_value()) {
    return requires_packet_id(p) ? "missing packet id" : "unexpected packet id";
  }
  if (p.packet_id && *p.packet_id == 0) return "packet id 0 is reserved";

  bool is_publish = p.type == PacketType::Publish;
  bool has_topic_list = p.type == PacketType::Subscribe || p.type == PacketType::Unsubscribe;
  if (is_publish != p.topic.has_value()) return is_publish ? "missing topic" : "unexpected topic";
  if (!is_publish && !p.payload.empty()) return "payload only applies to PUBLISH";
  if (has_topic_list == p.topics.empty()) {
    return has_topic_list ? "at least one topic required" : "unexpected topic list";
  }
  if ((p.type == PacketType::SubAck) == p.return_codes.empty()) {
    return p.type == PacketType::SubAck ? "SUBACK needs return codes" : "unexpected return codes";
  }
  if (p.type != PacketType::Connect && !(p.connect == ConnectInfo{})) {
    return "connect fields on non-CONNECT packet";
  }
  if (p.type != PacketType::ConnAck && (p.session_present || p.return_code != 0)) {
    return "connack fields on non-CONNACK packet";
  }

  if (is_publish) {
    if (auto e = topic_name_error(*p.topic)) return *e;
    if (p.payload.size() > kMaxPayload) return "payload exceeds 256 KiB";
    if (p.qos == 0 && p.dup) return "dup set on QoS 0 publish";
  }
  for (const auto& t : p.topics) {
    if (auto e = topic_name_error(t.topic)) return *e;
    if (t.qos > 2) return "requested qos must be 0, 1 or 2";
    if (p.type == PacketType::Unsubscribe && t.qos != 0) return "qos on UNSUBSCRIBE topic";
  }
  for (auto code : p.return_codes) {
    if (code > 2 && code != kSubAckFailure) return "invalid SUBACK return code";
  }
  if (p.type == PacketType::Connect) {
    if (p.connect.client_id.size() > kMaxStringLength) return "client id too long";
    if (p.connect.protocol_name != "MQTT" && p.connect.protocol_name != "MQIsdp") {
      return "unknown protocol name";
    }
  }
  if (p.type == PacketType::ConnAck && p.return_code > 5) return "invalid CONNACK code";
  return std::nullopt;
}

std::string describe(const Packet& p) {
  std::ostringstream out;
  out << to_string(p.type);
  if (p.packet_id) out << " id=" << *p.packet_id;
  if (p.type == PacketType::Publish) {
    out << " qos=" << int(p.qos) << (p.dup ? " dup" : "") << " topic=" << p.topic.value_or("")
        << " bytes=" << p.payload.size();
  }
  return out.str();
}

}  // namespace iotc::mqtt
