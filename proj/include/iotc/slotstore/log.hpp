#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace iotc::slotstore {

using Table = std::unordered_map<std::string, std::string>;

enum class LogOp : std::uint8_t { Set = 1, Del = 2 };

struct LogRecord {
  std::uint64_t sequence = 0;
  LogOp op = LogOp::Set;
  std::string key;
  std::string value;  // empty for Del
  std::int64_t timestamp_ms = 0;

  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

class CorruptLogError : public std::runtime_error {
 public:
  CorruptLogError(std::uint64_t sequence, const std::string& what)
      : std::runtime_error(what), sequence_(sequence) {}
  // First offending sequence number (0 when the record could not be parsed).
  std::uint64_t sequence() const { return sequence_; }

 private:
  std::uint64_t sequence_;
};

// On-disk record: u32 BE body length, body, u16 BE CRC-16 of body.
// Body: u64 sequence, i64 timestamp, u8 op, u32 key length, key,
// u32 value length, value. Integers are big-endian.
std::vector<std::uint8_t> encode_log_record(const LogRecord& r);
void append_log_record(const LogRecord& r, std::vector<std::uint8_t>& out);
// Parses one record from the front of buf. Returns the number of bytes used,
// or 0 if buf holds only part of a record. Throws CorruptLogError on CRC or
// structure mismatch.
std::size_t decode_log_record(std::span<const std::uint8_t> buf, LogRecord& out);

struct LogReadResult {
  std::vector<LogRecord> records;
  std::uint64_t valid_bytes = 0;
  bool torn_tail = false;  // trailing partial or checksum-failing record
};

// Reads a whole log file. A damaged final record is reported as a torn tail;
// damage before the final record throws CorruptLogError.
LogReadResult read_log(const std::filesystem::path& path);

// Reads the log and truncates a torn tail in place.
LogReadResult recover_log(const std::filesystem::path& path);

// Applies records in order on top of `start`, skipping records whose sequence
// is <= checkpoint (already reflected in `start`). Sequences must continue
// from checkpoint + 1 without gaps; otherwise CorruptLogError names the first
// bad sequence.
Table replay_log(std::span<const LogRecord> log, Table start = {}, std::uint64_t checkpoint = 0);

void apply_record(Table& table, const LogRecord& r);

// Append-only log file. Each append is a single write(2).
class LogWriter {
 public:
  LogWriter() = default;
  explicit LogWriter(const std::filesystem::path& path);
  LogWriter(const LogWriter&) = delete;
  LogWriter& operator=(const LogWriter&) = delete;
  LogWriter(LogWriter&& other) noexcept;
  LogWriter& operator=(LogWriter&& other) noexcept;
  ~LogWriter();

  bool is_open() const { return fd_ >= 0; }
  void append(const LogRecord& r);

 private:
  int fd_ = -1;
  std::vector<std::uint8_t> scratch_;
};

}  // namespace iotc::slotstore
