#include "iotc/slotstore/log.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <fstream>
#include <iterator>
#include <system_error>

#include "iotc/slotstore/crc16.hpp"

namespace iotc::slotstore {

namespace {

void put_be(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_be(std::span<const std::uint8_t> buf, std::size_t pos, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v = (v << 8) | buf[pos + i];
  return v;
}

constexpr std::size_t kMinBody = 8 + 8 + 1 + 4 + 4;
constexpr std::size_t kMaxBody = 512u * 1024 * 1024;

}  // namespace

void append_log_record(const LogRecord& r, std::vector<std::uint8_t>& out) {
  const std::size_t body_len = kMinBody + r.key.size() + r.value.size();
  const std::size_t start = out.size();
  put_be(out, body_len, 4);
  put_be(out, r.sequence, 8);
  put_be(out, static_cast<std::uint64_t>(r.timestamp_ms), 8);
  out.push_back(static_cast<std::uint8_t>(r.op));
  put_be(out, r.key.size(), 4);
  out.insert(out.end(), r.key.begin(), r.key.end());
  put_be(out, r.value.size(), 4);
  out.insert(out.end(), r.value.begin(), r.value.end());
  put_be(out, crc16(out.data() + start + 4, body_len), 2);
}

std::vector<std::uint8_t> encode_log_record(const LogRecord& r) {
  std::vector<std::uint8_t> out;
  append_log_record(r, out);
  return out;
}

std::size_t decode_log_record(std::span<const std::uint8_t> buf, LogRecord& out) {
  if (buf.size() < 4) return 0;
  const std::size_t body_len = get_be(buf, 0, 4);
  if (body_len < kMinBody || body_len > kMaxBody) {
    throw CorruptLogError(0, "log record with impossible length " + std::to_string(body_len));
  }
  const std::size_t total = 4 + body_len + 2;
  if (buf.size() < total) return 0;
  auto body = buf.subspan(4, body_len);
  if (crc16(body.data(), body.size()) != get_be(buf, 4 + body_len, 2)) {
    throw CorruptLogError(get_be(body, 0, 8), "log record checksum mismatch");
  }
  LogRecord r;
  r.sequence = get_be(body, 0, 8);
  r.timestamp_ms = static_cast<std::int64_t>(get_be(body, 8, 8));
  std::uint8_t op = body[16];
  if (op != static_cast<std::uint8_t>(LogOp::Set) && op != static_cast<std::uint8_t>(LogOp::Del)) {
    throw CorruptLogError(r.sequence, "unknown log op");
  }
  r.op = static_cast<LogOp>(op);
  std::size_t pos = 17;
  std::size_t key_len = get_be(body, pos, 4);
  pos += 4;
  if (pos + key_len + 4 > body.size()) throw CorruptLogError(r.sequence, "bad key length");
  r.key.assign(reinterpret_cast<const char*>(body.data() + pos), key_len);
  pos += key_len;
  std::size_t value_len = get_be(body, pos, 4);
  pos += 4;
  if (pos + value_len != body.size()) throw CorruptLogError(r.sequence, "bad value length");
  r.value.assign(reinterpret_cast<const char*>(body.data() + pos), value_len);
  out = std::move(r);
  return total;
}

LogReadResult read_log(const std::filesystem::path& path) {
  LogReadResult result;
  std::ifstream in(path, std::ios::binary);
  if (!in) return result;
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  std::span<const std::uint8_t> rest(data);
  while (!rest.empty()) {
    LogRecord r;
    std::size_t used = 0;
    try {
      used = decode_log_record(rest, r);
    } catch (const CorruptLogError&) {
      // Damage is tolerated only in the last record (a torn write).
      std::size_t len = rest.size() >= 4 ? get_be(rest, 0, 4) : 0;
      bool is_last = len == 0 || len > rest.size() || 4 + len + 2 >= rest.size();
      if (!is_last) throw;
      used = 0;
    }
    if (used == 0) {
      result.torn_tail = true;
      break;
    }
    result.records.push_back(std::move(r));
    result.valid_bytes += used;
    rest = rest.subspan(used);
  }
  return result;
}

LogReadResult recover_log(const std::filesystem::path& path) {
  LogReadResult result = read_log(path);
  if (result.torn_tail) std::filesystem::resize_file(path, result.valid_bytes);
  return result;
}

void apply_record(Table& table, const LogRecord& r) {
  if (r.op == LogOp::Set) {
    table.insert_or_assign(r.key, r.value);
  } else {
    table.erase(r.key);
  }
}

Table replay_log(std::span<const LogRecord> log, Table start, std::uint64_t checkpoint) {
  std::uint64_t next = checkpoint + 1;
  const LogRecord* previous = nullptr;
  for (const auto& r : log) {
    if (previous && r.sequence <= previous->sequence) {
      throw CorruptLogError(r.sequence, "sequence regression at " + std::to_string(r.sequence));
    }
    if (previous && r.sequence != previous->sequence + 1) {
      throw CorruptLogError(r.sequence, "sequence gap at " + std::to_string(r.sequence));
    }
    previous = &r;
    if (r.sequence < next) continue;  // already in `start`
    if (r.sequence != next) {
      throw CorruptLogError(r.sequence, "sequence gap at " + std::to_string(r.sequence));
    }
    apply_record(start, r);
    ++next;
  }
  return start;
}

LogWriter::LogWriter(const std::filesystem::path& path) {
  fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw std::system_error(errno, std::generic_category(), "open " + path.string());
}

LogWriter::LogWriter(LogWriter&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

LogWriter& LogWriter::operator=(LogWriter&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

LogWriter::~LogWriter() {
  if (fd_ >= 0) ::close(fd_);
}

void LogWriter::append(const LogRecord& r) {
  if (fd_ < 0) return;
  scratch_.clear();
  append_log_record(r, scratch_);
  std::size_t off = 0;
  while (off < scratch_.size()) {
    ssize_t n = ::write(fd_, scratch_.data() + off, scratch_.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::system_error(errno, std::generic_category(), "log append");
    }
    off += static_cast<std::size_t>(n);
  }
}

}  // namespace iotc::slotstore
