#pragma once

// Node-to-node and client-to-node framing: u32 BE length (opcode + body),
// u8 opcode, opcode-specific body. Strings are u32 BE length + bytes.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "iotc/slotstore/engine.hpp"
#include "iotc/slotstore/log.hpp"

namespace iotc::slotstore {

enum class Opcode : std::uint8_t {
  Set = 0x01,
  Get = 0x02,
  Del = 0x03,
  Moved = 0x04,
  Subscribe = 0x05,
  Unsubscribe = 0x06,
  Publish = 0x07,
  Forward = 0x08,
  LogShip = 0x09,
  Ping = 0x0A,
  Message = 0x0B,
  Hello = 0x0C,

  Ok = 0x10,
  Value = 0x11,
  Nil = 0x12,
  Error = 0x13,
  Pong = 0x14,
  LogShipAck = 0x15,
  Published = 0x16,

  Slots = 0x20,
  Failover = 0x21,
  Stats = 0x22,
  Json = 0x23,
};

inline constexpr std::size_t kMaxFrame = 64u * 1024 * 1024;

class FrameError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Frame {
  Opcode op = Opcode::Ping;
  std::string body;

  friend bool operator==(const Frame&, const Frame&) = default;
};

std::vector<std::uint8_t> encode_frame(const Frame& f);
void append_frame(const Frame& f, std::vector<std::uint8_t>& out);

// Incremental frame splitter for a byte stream.
class FrameDecoder {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  void feed(const char* data, std::size_t n) {
    feed(std::span(reinterpret_cast<const std::uint8_t*>(data), n));
  }
  // Throws FrameError for oversized or unknown frames.
  std::optional<Frame> next();
  std::size_t buffered() const { return buf_.size() - pos_; }

 private:
  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

class BodyWriter {
 public:
  BodyWriter& u8(std::uint8_t v);
  BodyWriter& u16(std::uint16_t v);
  BodyWriter& u32(std::uint32_t v);
  BodyWriter& u64(std::uint64_t v);
  BodyWriter& str(std::string_view s);
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class BodyReader {
 public:
  explicit BodyReader(std::string_view body) : body_(body) {}
  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  std::string str();
  void expect_end() const;

 private:
  std::uint64_t be(int bytes);
  std::string_view body_;
  std::size_t pos_ = 0;
};

// Typed message helpers.
Frame kv_request(const KvCommand& cmd);
KvCommand parse_kv_request(const Frame& f);
Frame kv_response(const KvCommand::Kind kind, const KvReply& reply);
KvReply parse_kv_response(const Frame& f);

Frame topic_frame(Opcode op, std::string_view topic);  // Subscribe / Unsubscribe
Frame message_frame(Opcode op, std::string_view topic, std::string_view payload);  // Publish / Message
Frame forward_frame(std::string_view origin, std::string_view topic, std::string_view payload);
Frame logship_frame(const LogRecord& r);
LogRecord parse_logship(const Frame& f);
Frame u64_frame(Opcode op, std::uint64_t v);  // Ping / Pong / LogShipAck
Frame string_frame(Opcode op, std::string_view s);  // Hello / Failover / Error / Json

struct PublishedCounts {
  std::uint32_t local = 0;
  std::uint32_t forwarded = 0;
  std::uint32_t dropped = 0;
};
Frame published_frame(const PublishedCounts& c);
PublishedCounts parse_published(const Frame& f);

std::string_view to_string(Opcode op);

}  // namespace iotc::slotstore
