#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "iotc/slotstore/crc16.hpp"

namespace iotc::slotstore {

using NodeId = std::string;

// Inclusive slot interval [lo, hi] owned by one node.
struct SlotRange {
  std::uint16_t lo = 0;
  std::uint16_t hi = 0;
  NodeId node;

  std::uint32_t size() const { return std::uint32_t(hi) - lo + 1; }
  bool contains(std::uint16_t slot) const { return slot >= lo && slot <= hi; }
  friend bool operator==(const SlotRange&, const SlotRange&) = default;
};

// Assignment of all 16384 slots to nodes as a sorted list of disjoint
// intervals covering [0, 16383]. Each node owns one contiguous interval.
class SlotMap {
 public:
  static SlotMap single(const NodeId& node);
  // Equal contiguous intervals in the given order; the first
  // (16384 mod n) nodes get one extra slot.
  static SlotMap equal_intervals(const std::vector<NodeId>& nodes);
  // Throws std::invalid_argument unless ranges partition the slot space.
  static SlotMap from_ranges(std::vector<SlotRange> ranges);

  const NodeId& owner(std::uint16_t slot) const;
  const NodeId& route(std::string_view key) const { return owner(hash_slot(key)); }
  bool owns(const NodeId& node, std::uint16_t slot) const { return owner(slot) == node; }

  const std::vector<SlotRange>& ranges() const { return ranges_; }
  std::vector<NodeId> nodes() const;
  std::uint32_t slot_count(const NodeId& node) const;

  // Hands every slot of `from` to `to`. Returns the number of slots moved.
  std::uint32_t reassign(const NodeId& from, const NodeId& to);

  nlohmann::json to_json() const;
  static SlotMap from_json(const nlohmann::json& j);

  friend bool operator==(const SlotMap&, const SlotMap&) = default;

 private:
  void normalize();
  std::vector<SlotRange> ranges_;
};

}  // namespace iotc::slotstore
