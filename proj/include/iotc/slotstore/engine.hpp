#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "iotc/slotstore/log.hpp"
#include "iotc/slotstore/slot_map.hpp"

namespace iotc::slotstore {

struct KvCommand {
  enum class Kind : std::uint8_t { Set, Get, Del };
  Kind kind = Kind::Get;
  std::string key;
  std::string value;

  static KvCommand set(std::string k, std::string v) { return {Kind::Set, std::move(k), std::move(v)}; }
  static KvCommand get(std::string k) { return {Kind::Get, std::move(k), {}}; }
  static KvCommand del(std::string k) { return {Kind::Del, std::move(k), {}}; }
};

struct KvReply {
  enum class Status : std::uint8_t { Ok, Moved, Error };
  Status status = Status::Ok;
  std::optional<std::string> value;  // Get: the value, if present
  bool removed = false;              // Del: whether the key existed
  std::uint16_t slot = 0;            // Moved
  NodeId owner;                      // Moved
  std::string error;                 // Error

  static KvReply ok(std::optional<std::string> v = std::nullopt) {
    KvReply r;
    r.value = std::move(v);
    return r;
  }
  static KvReply moved(std::uint16_t slot, NodeId owner) {
    KvReply r;
    r.status = Status::Moved;
    r.slot = slot;
    r.owner = std::move(owner);
    return r;
  }
  static KvReply failure(std::string what) {
    KvReply r;
    r.status = Status::Error;
    r.error = std::move(what);
    return r;
  }
  friend bool operator==(const KvReply&, const KvReply&) = default;
};

struct ExecOutcome {
  KvReply reply;
  std::optional<LogRecord> appended;  // set for mutations applied locally
};

// One node's table, slot ownership and transaction log. Not thread-safe: the
// owning node serializes all calls.
class StoreEngine {
 public:
  // Recovers state from log_path (if given and present) before serving.
  StoreEngine(NodeId self, SlotMap map, std::optional<std::filesystem::path> log_path = {});

  // Executes locally if this node owns the key's slot, otherwise Moved.
  // Mutations are appended to the log before the reply is produced.
  ExecOutcome execute(const KvCommand& cmd);

  // Standby path: append a shipped record to our own log and apply it.
  // Records at or below last_sequence() are ignored. Returns false on a gap.
  bool apply_replicated(const LogRecord& r);

  const NodeId& self() const { return self_; }
  const SlotMap& slot_map() const { return map_; }
  SlotMap& slot_map() { return map_; }
  const Table& table() const { return table_; }
  std::uint64_t last_sequence() const { return sequence_; }
  std::uint64_t recovered_records() const { return recovered_; }
  bool recovered_torn_tail() const { return torn_tail_; }

 private:
  LogRecord next_record(LogOp op, const std::string& key, const std::string& value);

  NodeId self_;
  SlotMap map_;
  Table table_;
  LogWriter log_;
  std::uint64_t sequence_ = 0;
  std::uint64_t recovered_ = 0;
  bool torn_tail_ = false;
};

std::int64_t now_ms();

}  // namespace iotc::slotstore
