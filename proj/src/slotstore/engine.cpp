#include "iotc/slotstore/engine.hpp"

#include <chrono>

namespace iotc::slotstore {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

StoreEngine::StoreEngine(NodeId self, SlotMap map, std::optional<std::filesystem::path> log_path)
    : self_(std::move(self)), map_(std::move(map)) {
  if (!log_path) return;
  if (std::filesystem::exists(*log_path)) {
    LogReadResult rec = recover_log(*log_path);
    table_ = replay_log(rec.records);
    if (!rec.records.empty()) sequence_ = rec.records.back().sequence;
    recovered_ = rec.records.size();
    torn_tail_ = rec.torn_tail;
  }
  log_ = LogWriter(*log_path);
}

LogRecord StoreEngine::next_record(LogOp op, const std::string& key, const std::string& value) {
  LogRecord r;
  r.sequence = ++sequence_;
  r.op = op;
  r.key = key;
  r.value = value;
  r.timestamp_ms = now_ms();
  return r;
}

ExecOutcome StoreEngine::execute(const KvCommand& cmd) {
  const std::uint16_t slot = hash_slot(cmd.key);
  const NodeId& owner = map_.owner(slot);
  if (owner != self_) return {KvReply::moved(slot, owner), std::nullopt};

  switch (cmd.kind) {
    case KvCommand::Kind::Get: {
      auto it = table_.find(cmd.key);
      if (it == table_.end()) return {KvReply::ok(), std::nullopt};
      return {KvReply::ok(it->second), std::nullopt};
    }
    case KvCommand::Kind::Set: {
      LogRecord r = next_record(LogOp::Set, cmd.key, cmd.value);
      log_.append(r);
      apply_record(table_, r);
      return {KvReply::ok(), std::move(r)};
    }
    case KvCommand::Kind::Del: {
      LogRecord r = next_record(LogOp::Del, cmd.key, {});
      log_.append(r);
      bool existed = table_.erase(cmd.key) > 0;
      KvReply reply = KvReply::ok();
      reply.removed = existed;
      return {std::move(reply), std::move(r)};
    }
  }
  return {KvReply::failure("unknown command"), std::nullopt};
}

bool StoreEngine::apply_replicated(const LogRecord& r) {
  if (r.sequence <= sequence_) return true;
  if (r.sequence != sequence_ + 1) return false;
  log_.append(r);
  apply_record(table_, r);
  sequence_ = r.sequence;
  return true;
}

}  // namespace iotc::slotstore
