#include "iotc/slotstore/protocol.hpp"

namespace iotc::slotstore {

namespace {

bool known_opcode(std::uint8_t op) {
  return (op >= 0x01 && op <= 0x0C) || (op >= 0x10 && op <= 0x16) || (op >= 0x20 && op <= 0x23);
}

}  // namespace

void append_frame(const Frame& f, std::vector<std::uint8_t>& out) {
  const std::uint32_t len = static_cast<std::uint32_t>(f.body.size() + 1);
  if (len > kMaxFrame) throw FrameError("frame too large");
  out.push_back(static_cast<std::uint8_t>(len >> 24));
  out.push_back(static_cast<std::uint8_t>(len >> 16));
  out.push_back(static_cast<std::uint8_t>(len >> 8));
  out.push_back(static_cast<std::uint8_t>(len));
  out.push_back(static_cast<std::uint8_t>(f.op));
  out.insert(out.end(), f.body.begin(), f.body.end());
}

std::vector<std::uint8_t> encode_frame(const Frame& f) {
  std::vector<std::uint8_t> out;
  out.reserve(f.body.size() + 5);
  append_frame(f, out);
  return out;
}

void FrameDecoder::feed(std::span<const std::uint8_t> bytes) {
  if (pos_ > 0 && pos_ == buf_.size()) {
    buf_.clear();
    pos_ = 0;
  } else if (pos_ > 65536 && pos_ * 2 > buf_.size()) {
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
    pos_ = 0;
  }
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<Frame> FrameDecoder::next() {
  const std::size_t avail = buf_.size() - pos_;
  if (avail < 5) return std::nullopt;
  const std::uint8_t* p = buf_.data() + pos_;
  const std::uint32_t len = (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
                            (std::uint32_t(p[2]) << 8) | p[3];
  if (len == 0 || len > kMaxFrame) throw FrameError("bad frame length");
  if (!known_opcode(p[4])) throw FrameError("unknown opcode " + std::to_string(p[4]));
  if (avail < 4 + std::size_t(len)) return std::nullopt;
  Frame f;
  f.op = static_cast<Opcode>(p[4]);
  f.body.assign(reinterpret_cast<const char*>(p + 5), len - 1);
  pos_ += 4 + len;
  return f;
}

BodyWriter& BodyWriter::u8(std::uint8_t v) {
  out_.push_back(static_cast<char>(v));
  return *this;
}
BodyWriter& BodyWriter::u16(std::uint16_t v) {
  out_.push_back(static_cast<char>(v >> 8));
  out_.push_back(static_cast<char>(v));
  return *this;
}
BodyWriter& BodyWriter::u32(std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out_.push_back(static_cast<char>(v >> (8 * i)));
  return *this;
}
BodyWriter& BodyWriter::u64(std::uint64_t v) {
  for (int i = 7; i >= 0; --i) out_.push_back(static_cast<char>(v >> (8 * i)));
  return *this;
}
BodyWriter& BodyWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  out_.append(s);
  return *this;
}

std::uint64_t BodyReader::be(int bytes) {
  if (body_.size() - pos_ < static_cast<std::size_t>(bytes)) throw FrameError("truncated body");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v = (v << 8) | static_cast<std::uint8_t>(body_[pos_ + i]);
  pos_ += bytes;
  return v;
}
std::uint8_t BodyReader::u8() { return static_cast<std::uint8_t>(be(1)); }
std::uint16_t BodyReader::u16() { return static_cast<std::uint16_t>(be(2)); }
std::uint32_t BodyReader::u32() { return static_cast<std::uint32_t>(be(4)); }
std::uint64_t BodyReader::u64() { return be(8); }
std::string BodyReader::str() {
  std::size_t n = u32();
  if (body_.size() - pos_ < n) throw FrameError("truncated string");
  std::string s(body_.substr(pos_, n));
  pos_ += n;
  return s;
}
void BodyReader::expect_end() const {
  if (pos_ != body_.size()) throw FrameError("trailing bytes in frame body");
}

Frame kv_request(const KvCommand& cmd) {
  switch (cmd.kind) {
    case KvCommand::Kind::Set:
      return {Opcode::Set, BodyWriter().str(cmd.key).str(cmd.value).take()};
    case KvCommand::Kind::Get:
      return {Opcode::Get, BodyWriter().str(cmd.key).take()};
    case KvCommand::Kind::Del:
      return {Opcode::Del, BodyWriter().str(cmd.key).take()};
  }
  throw FrameError("bad command kind");
}

KvCommand parse_kv_request(const Frame& f) {
  BodyReader r(f.body);
  KvCommand cmd;
  switch (f.op) {
    case Opcode::Set:
      cmd.kind = KvCommand::Kind::Set;
      cmd.key = r.str();
      cmd.value = r.str();
      break;
    case Opcode::Get:
      cmd.kind = KvCommand::Kind::Get;
      cmd.key = r.str();
      break;
    case Opcode::Del:
      cmd.kind = KvCommand::Kind::Del;
      cmd.key = r.str();
      break;
    default:
      throw FrameError("not a key-value request");
  }
  r.expect_end();
  return cmd;
}

Frame kv_response(KvCommand::Kind kind, const KvReply& reply) {
  switch (reply.status) {
    case KvReply::Status::Moved:
      return {Opcode::Moved, BodyWriter().u16(reply.slot).str(reply.owner).take()};
    case KvReply::Status::Error:
      return string_frame(Opcode::Error, reply.error);
    case KvReply::Status::Ok:
      break;
  }
  if (kind == KvCommand::Kind::Get) {
    if (!reply.value) return {Opcode::Nil, {}};
    return {Opcode::Value, BodyWriter().str(*reply.value).take()};
  }
  return {Opcode::Ok, BodyWriter().u8(reply.removed ? 1 : 0).take()};
}

KvReply parse_kv_response(const Frame& f) {
  BodyReader r(f.body);
  KvReply reply;
  switch (f.op) {
    case Opcode::Ok:
      reply.removed = r.u8() != 0;
      break;
    case Opcode::Value:
      reply.value = r.str();
      break;
    case Opcode::Nil:
      break;
    case Opcode::Moved: {
      std::uint16_t slot = r.u16();
      reply = KvReply::moved(slot, r.str());
      break;
    }
    case Opcode::Error:
      reply = KvReply::failure(r.str());
      break;
    default:
      throw FrameError("unexpected reply opcode " + std::string(to_string(f.op)));
  }
  r.expect_end();
  return reply;
}

Frame topic_frame(Opcode op, std::string_view topic) {
  return {op, BodyWriter().str(topic).take()};
}

Frame message_frame(Opcode op, std::string_view topic, std::string_view payload) {
  return {op, BodyWriter().str(topic).str(payload).take()};
}

Frame forward_frame(std::string_view origin, std::string_view topic, std::string_view payload) {
  return {Opcode::Forward, BodyWriter().str(origin).str(topic).str(payload).take()};
}

Frame logship_frame(const LogRecord& r) {
  auto bytes = encode_log_record(r);
  return {Opcode::LogShip, std::string(bytes.begin(), bytes.end())};
}

LogRecord parse_logship(const Frame& f) {
  LogRecord r;
  std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(f.body.data()),
                                      f.body.size());
  if (decode_log_record(bytes, r) != bytes.size()) throw FrameError("bad LOGSHIP body");
  return r;
}

Frame u64_frame(Opcode op, std::uint64_t v) { return {op, BodyWriter().u64(v).take()}; }

Frame string_frame(Opcode op, std::string_view s) { return {op, BodyWriter().str(s).take()}; }

Frame published_frame(const PublishedCounts& c) {
  return {Opcode::Published, BodyWriter().u32(c.local).u32(c.forwarded).u32(c.dropped).take()};
}

PublishedCounts parse_published(const Frame& f) {
  BodyReader r(f.body);
  PublishedCounts c;
  c.local = r.u32();
  c.forwarded = r.u32();
  c.dropped = r.u32();
  r.expect_end();
  return c;
}

std::string_view to_string(Opcode op) {
  switch (op) {
    case Opcode::Set: return "SET";
    case Opcode::Get: return "GET";
    case Opcode::Del: return "DEL";
    case Opcode::Moved: return "MOVED";
    case Opcode::Subscribe: return "SUBSCRIBE";
    case Opcode::Unsubscribe: return "UNSUBSCRIBE";
    case Opcode::Publish: return "PUBLISH";
    case Opcode::Forward: return "FORWARD";
    case Opcode::LogShip: return "LOGSHIP";
    case Opcode::Ping: return "PING";
    case Opcode::Message: return "MESSAGE";
    case Opcode::Hello: return "HELLO";
    case Opcode::Ok: return "OK";
    case Opcode::Value: return "VALUE";
    case Opcode::Nil: return "NIL";
    case Opcode::Error: return "ERROR";
    case Opcode::Pong: return "PONG";
    case Opcode::LogShipAck: return "LOGSHIP_ACK";
    case Opcode::Published: return "PUBLISHED";
    case Opcode::Slots: return "SLOTS";
    case Opcode::Failover: return "FAILOVER";
    case Opcode::Stats: return "STATS";
    case Opcode::Json: return "JSON";
  }
  return "?";
}

}  // namespace iotc::slotstore
