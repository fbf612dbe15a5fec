#include "iotc/mqtt/codec.hpp"

#include <string_view>

namespace iotc::mqtt {

namespace {

// Largest body the decoder will buffer: a max-size payload plus a max-size
// topic, its length prefix and a packet id.
constexpr std::size_t kMaxFrameBody = kMaxPayload + kMaxStringLength + 4;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

void put_string(std::vector<std::uint8_t>& out, std::string_view s) {
  put_u16(out, static_cast<std::uint16_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

std::uint8_t fixed_flags(const Packet& p) {
  switch (p.type) {
    case PacketType::Publish:
      return static_cast<std::uint8_t>((p.dup ? 0x08 : 0) | (p.qos << 1));
    case PacketType::PubRel:
    case PacketType::Subscribe:
    case PacketType::Unsubscribe: return 0x02;
    default: return 0;
  }
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> body) : body_(body) {}

  std::uint8_t u8() {
    need(1);
    return body_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    auto v = static_cast<std::uint16_t>((body_[pos_] << 8) | body_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::string str() {
    std::size_t n = u16();
    need(n);
    std::string s(reinterpret_cast<const char*>(body_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::uint16_t packet_id() {
    auto id = u16();
    if (id == 0) throw ProtocolError("packet id 0 is reserved");
    return id;
  }
  std::string rest() {
    std::string s(reinterpret_cast<const char*>(body_.data() + pos_), body_.size() - pos_);
    pos_ = body_.size();
    return s;
  }
  bool done() const { return pos_ == body_.size(); }
  void expect_done(const char* what) const {
    if (!done()) throw ProtocolError(std::string("trailing bytes in ") + what);
  }

 private:
  void need(std::size_t n) const {
    if (body_.size() - pos_ < n) throw ProtocolError("truncated packet body");
  }
  std::span<const std::uint8_t> body_;
  std::size_t pos_ = 0;
};

void check_topic(std::string_view topic) {
  if (auto e = topic_name_error(topic)) throw ProtocolError(*e);
}

Packet decode_connect(Reader& r) {
  Packet p;
  p.type = PacketType::Connect;
  p.connect.protocol_name = r.str();
  if (p.connect.protocol_name != "MQTT" && p.connect.protocol_name != "MQIsdp") {
    throw ProtocolError("unknown protocol name");
  }
  p.connect.protocol_level = r.u8();
  std::uint8_t flags = r.u8();
  if (flags & 0x01) throw ProtocolError("reserved connect flag set");
  if (flags & 0x04) throw ProtocolError("wills are not supported");
  if (flags & 0x38) throw ProtocolError("will qos/retain set without will");
  if (flags & 0xC0) throw ProtocolError("authentication is not supported");
  p.connect.clean_session = (flags & 0x02) != 0;
  p.connect.keepalive = r.u16();
  p.connect.client_id = r.str();
  r.expect_done("CONNECT");
  return p;
}

Packet decode_body(PacketType type, std::uint8_t flags, std::span<const std::uint8_t> body) {
  Reader r(body);
  Packet p;
  p.type = type;
  switch (type) {
    case PacketType::Connect:
      return decode_connect(r);
    case PacketType::ConnAck: {
      std::uint8_t ack_flags = r.u8();
      if (ack_flags & 0xFE) throw ProtocolError("reserved CONNACK flags set");
      p.session_present = ack_flags & 0x01;
      p.return_code = r.u8();
      if (p.return_code > 5) throw ProtocolError("invalid CONNACK code");
      r.expect_done("CONNACK");
      return p;
    }
    case PacketType::Publish: {
      p.dup = (flags & 0x08) != 0;
      p.qos = (flags >> 1) & 0x03;
      p.topic = r.str();
      check_topic(*p.topic);
      if (p.qos > 0) p.packet_id = r.packet_id();
      p.payload = r.rest();
      if (p.payload.size() > kMaxPayload) throw ProtocolError("payload exceeds 256 KiB");
      return p;
    }
    case PacketType::PubAck:
    case PacketType::PubRec:
    case PacketType::PubRel:
    case PacketType::PubComp:
    case PacketType::UnsubAck:
      p.packet_id = r.packet_id();
      r.expect_done("acknowledgement");
      return p;
    case PacketType::Subscribe: {
      p.packet_id = r.packet_id();
      while (!r.done()) {
        TopicRequest t;
        t.topic = r.str();
        check_topic(t.topic);
        std::uint8_t q = r.u8();
        if (q > 2) throw ProtocolError("invalid requested qos");
        t.qos = q;
        p.topics.push_back(std::move(t));
      }
      if (p.topics.empty()) throw ProtocolError("SUBSCRIBE without topics");
      return p;
    }
    case PacketType::SubAck: {
      p.packet_id = r.packet_id();
      while (!r.done()) {
        std::uint8_t code = r.u8();
        if (code > 2 && code != kSubAckFailure) throw ProtocolError("invalid SUBACK code");
        p.return_codes.push_back(code);
      }
      if (p.return_codes.empty()) throw ProtocolError("SUBACK without return codes");
      return p;
    }
    case PacketType::Unsubscribe: {
      p.packet_id = r.packet_id();
      while (!r.done()) {
        TopicRequest t;
        t.topic = r.str();
        check_topic(t.topic);
        p.topics.push_back(std::move(t));
      }
      if (p.topics.empty()) throw ProtocolError("UNSUBSCRIBE without topics");
      return p;
    }
    case PacketType::PingReq:
    case PacketType::PingResp:
    case PacketType::Disconnect:
      r.expect_done("empty packet");
      return p;
  }
  throw ProtocolError("reserved packet type");
}

}  // namespace

void append_remaining_length(std::uint64_t n, std::vector<std::uint8_t>& out) {
  if (n > kMaxRemainingLength) {
    throw EncodeError("remaining length " + std::to_string(n) + " out of range");
  }
  do {
    auto byte = static_cast<std::uint8_t>(n % 128);
    n /= 128;
    if (n > 0) byte |= 0x80;
    out.push_back(byte);
  } while (n > 0);
}

std::vector<std::uint8_t> encode_remaining_length(std::uint64_t n) {
  std::vector<std::uint8_t> out;
  append_remaining_length(n, out);
  return out;
}

std::optional<VarintDecode> decode_remaining_length(std::span<const std::uint8_t> buf) {
  std::uint32_t value = 0;
  std::uint32_t multiplier = 1;
  for (std::size_t i = 0; i < 4; ++i) {
    if (i >= buf.size()) return std::nullopt;
    std::uint8_t byte = buf[i];
    value += (byte & 0x7F) * multiplier;
    if ((byte & 0x80) == 0) return VarintDecode{value, i + 1};
    multiplier *= 128;
  }
  throw ProtocolError("remaining length longer than 4 bytes");
}

void append_packet(const Packet& p, std::vector<std::uint8_t>& out) {
  if (auto e = packet_error(p)) throw EncodeError(*e);

  std::vector<std::uint8_t> body;
  switch (p.type) {
    case PacketType::Connect: {
      put_string(body, p.connect.protocol_name);
      body.push_back(p.connect.protocol_level);
      body.push_back(p.connect.clean_session ? 0x02 : 0x00);
      put_u16(body, p.connect.keepalive);
      put_string(body, p.connect.client_id);
      break;
    }
    case PacketType::ConnAck:
      body.push_back(p.session_present ? 0x01 : 0x00);
      body.push_back(p.return_code);
      break;
    case PacketType::Publish:
      body.reserve(2 + p.topic->size() + 2 + p.payload.size());
      put_string(body, *p.topic);
      if (p.packet_id) put_u16(body, *p.packet_id);
      body.insert(body.end(), p.payload.begin(), p.payload.end());
      break;
    case PacketType::PubAck:
    case PacketType::PubRec:
    case PacketType::PubRel:
    case PacketType::PubComp:
    case PacketType::UnsubAck:
      put_u16(body, *p.packet_id);
      break;
    case PacketType::Subscribe:
      put_u16(body, *p.packet_id);
      for (const auto& t : p.topics) {
        put_string(body, t.topic);
        body.push_back(t.qos);
      }
      break;
    case PacketType::SubAck:
      put_u16(body, *p.packet_id);
      body.insert(body.end(), p.return_codes.begin(), p.return_codes.end());
      break;
    case PacketType::Unsubscribe:
      put_u16(body, *p.packet_id);
      for (const auto& t : p.topics) put_string(body, t.topic);
      break;
    case PacketType::PingReq:
    case PacketType::PingResp:
    case PacketType::Disconnect:
      break;
  }

  out.push_back(static_cast<std::uint8_t>((static_cast<unsigned>(p.type) << 4) | fixed_flags(p)));
  append_remaining_length(body.size(), out);
  out.insert(out.end(), body.begin(), body.end());
}

std::vector<std::uint8_t> encode_packet(const Packet& p) {
  std::vector<std::uint8_t> out;
  append_packet(p, out);
  return out;
}

std::optional<Decoded> decode_packet(std::span<const std::uint8_t> buf) {
  if (buf.empty()) return std::nullopt;
  const std::uint8_t first = buf[0];
  const unsigned type_value = first >> 4;
  const std::uint8_t flags = first & 0x0F;
  if (type_value == 0 || type_value == 15) throw ProtocolError("reserved packet type");
  const auto type = static_cast<PacketType>(type_value);

  if (type == PacketType::Publish) {
    if (((flags >> 1) & 0x03) == 3) throw ProtocolError("qos 3 is forbidden");
    if (flags & 0x01) throw ProtocolError("retained messages are not supported");
    if ((flags & 0x08) && ((flags >> 1) & 0x03) == 0) throw ProtocolError("dup set on QoS 0");
  } else {
    std::uint8_t expected = (type == PacketType::PubRel || type == PacketType::Subscribe ||
                             type == PacketType::Unsubscribe)
                                ? 0x02
                                : 0x00;
    if (flags != expected) throw ProtocolError("malformed fixed header flags");
  }

  auto length = decode_remaining_length(buf.subspan(1));
  if (!length) return std::nullopt;
  if (length->value > kMaxFrameBody) throw ProtocolError("packet exceeds size limit");
  const std::size_t header = 1 + length->length;
  if (buf.size() < header + length->value) return std::nullopt;

  Decoded d;
  d.packet = decode_body(type, flags, buf.subspan(header, length->value));
  d.consumed = header + length->value;
  return d;
}

}  // namespace iotc::mqtt
