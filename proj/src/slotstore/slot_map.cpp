#include "iotc/slotstore/slot_map.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace iotc::slotstore {

SlotMap SlotMap::single(const NodeId& node) {
  return from_ranges({SlotRange{0, kSlotCount - 1, node}});
}

SlotMap SlotMap::equal_intervals(const std::vector<NodeId>& nodes) {
  if (nodes.empty()) throw std::invalid_argument("slot map needs at least one node");
  if (nodes.size() > kSlotCount) throw std::invalid_argument("more nodes than slots");
  std::vector<SlotRange> ranges;
  const std::uint32_t n = static_cast<std::uint32_t>(nodes.size());
  const std::uint32_t base = kSlotCount / n;
  const std::uint32_t extra = kSlotCount % n;
  std::uint32_t lo = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    std::uint32_t size = base + (i < extra ? 1 : 0);
    ranges.push_back({static_cast<std::uint16_t>(lo), static_cast<std::uint16_t>(lo + size - 1),
                      nodes[i]});
    lo += size;
  }
  return from_ranges(std::move(ranges));
}

SlotMap SlotMap::from_ranges(std::vector<SlotRange> ranges) {
  std::sort(ranges.begin(), ranges.end(),
            [](const SlotRange& a, const SlotRange& b) { return a.lo < b.lo; });
  std::uint32_t expected = 0;
  for (const auto& r : ranges) {
    if (r.node.empty()) throw std::invalid_argument("slot range without owner");
    if (r.hi < r.lo) throw std::invalid_argument("slot range with hi < lo");
    if (r.lo != expected) {
      throw std::invalid_argument(r.lo < expected ? "overlapping slot ranges"
                                                  : "gap in slot ranges at " +
                                                        std::to_string(expected));
    }
    expected = std::uint32_t(r.hi) + 1;
  }
  if (expected != kSlotCount) throw std::invalid_argument("slot ranges do not reach 16383");
  SlotMap map;
  map.ranges_ = std::move(ranges);
  map.normalize();
  std::set<NodeId> seen;
  for (const auto& r : map.ranges_) {
    if (!seen.insert(r.node).second) {
      throw std::invalid_argument("node " + r.node + " owns non-contiguous slots");
    }
  }
  return map;
}

void SlotMap::normalize() {
  std::vector<SlotRange> merged;
  for (auto& r : ranges_) {
    if (!merged.empty() && merged.back().node == r.node && merged.back().hi + 1 == r.lo) {
      merged.back().hi = r.hi;
    } else {
      merged.push_back(std::move(r));
    }
  }
  ranges_ = std::move(merged);
}

const NodeId& SlotMap::owner(std::uint16_t slot) const {
  if (slot >= kSlotCount) throw std::out_of_range("slot " + std::to_string(slot));
  auto it = std::upper_bound(ranges_.begin(), ranges_.end(), slot,
                             [](std::uint16_t s, const SlotRange& r) { return s < r.lo; });
  return std::prev(it)->node;
}

std::vector<NodeId> SlotMap::nodes() const {
  std::vector<NodeId> out;
  for (const auto& r : ranges_) out.push_back(r.node);
  return out;
}

std::uint32_t SlotMap::slot_count(const NodeId& node) const {
  std::uint32_t n = 0;
  for (const auto& r : ranges_) {
    if (r.node == node) n += r.size();
  }
  return n;
}

std::uint32_t SlotMap::reassign(const NodeId& from, const NodeId& to) {
  std::uint32_t moved = 0;
  for (auto& r : ranges_) {
    if (r.node == from) {
      r.node = to;
      moved += r.size();
    }
  }
  normalize();
  return moved;
}

nlohmann::json SlotMap::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& r : ranges_) arr.push_back({{"lo", r.lo}, {"hi", r.hi}, {"node", r.node}});
  return arr;
}

SlotMap SlotMap::from_json(const nlohmann::json& j) {
  std::vector<SlotRange> ranges;
  for (const auto& r : j) {
    ranges.push_back({r.at("lo").get<std::uint16_t>(), r.at("hi").get<std::uint16_t>(),
                      r.at("node").get<std::string>()});
  }
  return from_ranges(std::move(ranges));
}

}  // namespace iotc::slotstore
