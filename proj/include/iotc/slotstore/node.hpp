#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "iotc/common/asio.hpp"
#include "iotc/common/event_log.hpp"
#include "iotc/slotstore/engine.hpp"
#include "iotc/slotstore/manifest.hpp"
#include "iotc/slotstore/protocol.hpp"

namespace iotc::slotstore {

// One slot-store node. Everything runs on the io_context passed in, which must
// be driven by a single thread. The node must outlive that io_context's run().
class StoreNode {
 public:
  StoreNode(asio::io_context& io, ClusterManifest manifest, NodeId self,
            EventLog* events = nullptr);
  StoreNode(const StoreNode&) = delete;
  StoreNode& operator=(const StoreNode&) = delete;
  ~StoreNode();

  // Binds the listen address and starts peer links. Throws on bind failure.
  void start();
  void stop();

  tcp::endpoint local_endpoint() const { return acceptor_.local_endpoint(); }

  // Marks `node` failed and hands its slots to its standby, if it has one.
  // Returns the number of slots reassigned.
  std::uint32_t fail_over(const NodeId& node);

  nlohmann::json stats() const;
  nlohmann::json slots_json() const;
  const StoreEngine& engine() const { return engine_; }

 private:
  struct Conn;
  struct PeerLink;

  awaitable<void> accept_loop();
  awaitable<void> serve(std::shared_ptr<Conn> c);
  awaitable<void> handle(std::shared_ptr<Conn> c, Frame f);
  awaitable<void> run_link(PeerLink& link);
  awaitable<void> read_link(PeerLink& link, std::shared_ptr<Conn> c);
  awaitable<bool> wait_shipped(std::uint64_t sequence);

  void start_conn(const std::shared_ptr<Conn>& c);
  void drop_conn(const std::shared_ptr<Conn>& c);
  std::uint32_t deliver_local(const std::string& topic, const std::string& payload);
  PublishedCounts publish(const std::string& topic, const std::string& payload);
  void note_miss(PeerLink& link);
  void ship(const LogRecord& r);
  void on_ship_ack(PeerLink& link, std::uint64_t sequence);
  PeerLink* link_to(const NodeId& id);
  bool standby_usable() const;

  asio::io_context& io_;
  ClusterManifest manifest_;
  NodeId self_;
  EventLog* events_;
  std::optional<std::filesystem::path> log_path_;
  StoreEngine engine_;
  tcp::acceptor acceptor_;
  bool stopping_ = false;

  std::uint64_t next_conn_id_ = 1;
  std::unordered_map<std::uint64_t, std::shared_ptr<Conn>> conns_;
  std::unordered_map<std::string, std::set<std::uint64_t>> topics_;
  std::vector<std::unique_ptr<PeerLink>> links_;
  std::set<NodeId> failed_;

  // Log shipping to our standby (primary side).
  std::optional<NodeId> standby_;
  std::deque<LogRecord> unacked_;
  std::uint64_t shipped_acked_ = 0;
  std::multimap<std::uint64_t, std::shared_ptr<asio::steady_timer>> ack_waiters_;

  struct Counters {
    std::uint64_t commands = 0;
    std::uint64_t moved = 0;
    std::uint64_t published = 0;
    std::uint64_t delivered = 0;
    std::uint64_t forwarded = 0;
    std::uint64_t forward_received = 0;
    std::uint64_t forward_dropped = 0;
    std::uint64_t delivery_dropped = 0;
    std::uint64_t replicated = 0;
    std::uint64_t replication_gaps = 0;
    std::uint64_t strict_timeouts = 0;
  } counters_;
};

}  // namespace iotc::slotstore
