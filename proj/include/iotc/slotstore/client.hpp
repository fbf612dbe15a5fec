#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "iotc/common/asio.hpp"
#include "iotc/common/host_port.hpp"
#include "iotc/slotstore/engine.hpp"
#include "iotc/slotstore/protocol.hpp"

namespace iotc::slotstore {

// Raised when a key's owner cannot be reached within the retry budget.
class RoutingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Connection-level failure talking to one node (refused, reset, timeout).
class NodeUnreachable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Blocking cluster client. Routes by its cached slot map, follows MOVED and
// refreshes the map when a node is unreachable. Not thread-safe.
class ClusterClient {
 public:
  static constexpr int kRetryBudget = 2;

  explicit ClusterClient(std::vector<HostPort> seeds,
                         std::chrono::milliseconds timeout = std::chrono::milliseconds(2000));
  ~ClusterClient();

  // Result is independent of which node the request enters at.
  KvReply execute(const KvCommand& cmd);
  // Same, but the first attempt goes to `entry`.
  KvReply execute_via(const NodeId& entry, const KvCommand& cmd);
  // One attempt at `node`, no redirect handling.
  KvReply send_to(const NodeId& node, const KvCommand& cmd);

  void set(const std::string& key, const std::string& value);
  std::optional<std::string> get(const std::string& key);
  bool del(const std::string& key);

  // Reloads the slot map and node addresses from the first reachable node.
  void refresh();
  const SlotMap& slot_map() const { return map_; }
  const std::map<NodeId, HostPort>& addresses() const { return addresses_; }
  std::uint64_t redirects() const { return redirects_; }

  // One request/response exchange with an arbitrary address.
  Frame request(const HostPort& at, const Frame& f);
  nlohmann::json admin(const HostPort& at, Opcode op, const std::string& arg = {});

 private:
  struct Link;
  Link& link(const HostPort& at);
  void drop(const HostPort& at);
  KvReply checked(const KvReply& r);

  asio::io_context io_;
  std::vector<HostPort> seeds_;
  std::chrono::milliseconds timeout_;
  SlotMap map_;
  std::map<NodeId, HostPort> addresses_;
  std::map<std::string, std::unique_ptr<Link>> links_;
  std::uint64_t redirects_ = 0;
};

}  // namespace iotc::slotstore
