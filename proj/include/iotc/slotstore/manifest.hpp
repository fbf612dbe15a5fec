#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "iotc/common/host_port.hpp"
#include "iotc/slotstore/slot_map.hpp"

namespace iotc::slotstore {

enum class Replication { Async, Strict };

struct NodeSpec {
  NodeId id;
  HostPort address;
  std::optional<SlotRange> slots;  // explicit interval; primaries only
  std::optional<NodeId> standby_of;
  std::optional<std::filesystem::path> log;
};

// Static cluster membership, loaded from TOML:
//
//   [cluster]
//   replication = "strict"      # or "async" (default)
//   ping_interval_ms = 1000
//   ping_misses = 3
//
//   [[node]]
//   id = "a"
//   address = "127.0.0.1:7001"
//   slots = [0, 8191]           # optional; omitted everywhere = equal intervals
//   log = "a.log"               # relative to the manifest's directory
//
//   [[node]]
//   id = "a2"
//   address = "127.0.0.1:7003"
//   standby_of = "a"
struct ClusterManifest {
  std::vector<NodeSpec> nodes;
  Replication replication = Replication::Async;
  std::chrono::milliseconds ping_interval{1000};
  int ping_misses = 3;

  static ClusterManifest load(const std::filesystem::path& path);
  static ClusterManifest parse(std::string_view toml_text,
                               const std::filesystem::path& base_dir = {});
  std::string to_toml() const;

  // Throws std::invalid_argument on duplicate ids, dangling standby_of,
  // standbys with slots, or slots that do not partition the space.
  void validate() const;

  const NodeSpec& node(const NodeId& id) const;  // throws std::out_of_range
  std::vector<NodeId> primaries() const;          // sorted by id
  std::optional<NodeId> standby_for(const NodeId& primary) const;
  SlotMap initial_slot_map() const;
};

}  // namespace iotc::slotstore
