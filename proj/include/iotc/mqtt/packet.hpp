#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace iotc::mqtt {

// MQTT 3.1.1 control packet types supported by this implementation. Values are
// the on-wire type nibble.
enum class PacketType : std::uint8_t {
  Connect = 1,
  ConnAck = 2,
  Publish = 3,
  PubAck = 4,
  PubRec = 5,
  PubRel = 6,
  PubComp = 7,
  Subscribe = 8,
  SubAck = 9,
  Unsubscribe = 10,
  UnsubAck = 11,
  PingReq = 12,
  PingResp = 13,
  Disconnect = 14,
};

std::string_view to_string(PacketType type);

inline constexpr std::size_t kMaxPayload = 256 * 1024;
inline constexpr std::uint32_t kMaxRemainingLength = 268'435'455;
inline constexpr std::size_t kMaxStringLength = 65535;
inline constexpr std::uint8_t kProtocolLevel311 = 4;

inline constexpr std::uint8_t kConnAccepted = 0;
inline constexpr std::uint8_t kConnRefusedProtocolVersion = 1;
inline constexpr std::uint8_t kSubAckFailure = 0x80;

struct TopicRequest {
  std::string topic;
  std::uint8_t qos = 0;  // ignored for Unsubscribe

  friend bool operator==(const TopicRequest&, const TopicRequest&) = default;
};

struct ConnectInfo {
  std::string protocol_name = "MQTT";
  std::uint8_t protocol_level = kProtocolLevel311;
  bool clean_session = true;
  std::uint16_t keepalive = 60;
  std::string client_id;

  friend bool operator==(const ConnectInfo&, const ConnectInfo&) = default;
};

// A decoded control packet. Fields that do not apply to `type` stay at their
// defaults; encode_packet() rejects packets that violate this.
struct Packet {
  PacketType type = PacketType::PingReq;
  bool dup = false;
  std::uint8_t qos = 0;
  bool retain = false;  // always false on the wire; set -> rejected
  std::optional<std::uint16_t> packet_id;

  std::optional<std::string> topic;  // Publish
  std::string payload;               // Publish (opaque bytes)

  std::vector<TopicRequest> topics;       // Subscribe / Unsubscribe
  std::vector<std::uint8_t> return_codes;  // SubAck

  ConnectInfo connect;           // Connect
  bool session_present = false;  // ConnAck
  std::uint8_t return_code = 0;  // ConnAck

  friend bool operator==(const Packet&, const Packet&) = default;

  static Packet connect_packet(std::string client_id, std::uint16_t keepalive = 60);
  static Packet connack(std::uint8_t code, bool session_present = false);
  static Packet publish(std::string topic, std::string payload, std::uint8_t qos = 0,
                        std::optional<std::uint16_t> id = std::nullopt, bool dup = false);
  // PubAck, PubRec, PubRel, PubComp, UnsubAck
  static Packet ack(PacketType type, std::uint16_t id);
  static Packet subscribe(std::uint16_t id, std::vector<TopicRequest> topics);
  static Packet suback(std::uint16_t id, std::vector<std::uint8_t> codes);
  static Packet unsubscribe(std::uint16_t id, std::vector<std::string> topics);
  static Packet simple(PacketType type);  // PingReq, PingResp, Disconnect
};

// Exact-match topic names: non-empty, well-formed UTF-8 without U+0000,
// no '+' or '#', at most 65535 bytes. Returns the violation, if any.
std::optional<std::string> topic_name_error(std::string_view topic);
inline bool is_valid_topic_name(std::string_view topic) { return !topic_name_error(topic); }

bool requires_packet_id(const Packet& p);

// Returns a description of the first invariant the packet violates.
std::optional<std::string> packet_error(const Packet& p);

std::string describe(const Packet& p);

}  // namespace iotc::mqtt
