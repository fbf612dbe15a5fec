#include "iotc/slotstore/slot_map.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

namespace iotc::slotstore {
namespace {

void expect_partition(const SlotMap& map) {
  std::uint32_t total = 0;
  std::uint32_t next = 0;
  std::set<NodeId> owners;
  for (const auto& r : map.ranges()) {
    EXPECT_EQ(r.lo, next);
    EXPECT_TRUE(owners.insert(r.node).second) << "non-contiguous owner " << r.node;
    total += r.size();
    next = r.hi + 1u;
  }
  EXPECT_EQ(total, kSlotCount);
  for (std::uint32_t s = 0; s < kSlotCount; s += 97) {
    int holders = 0;
    for (const auto& r : map.ranges()) holders += r.contains(static_cast<std::uint16_t>(s));
    EXPECT_EQ(holders, 1);
  }
}

TEST(SlotMap, EqualIntervalsPartitionForEveryClusterSize) {
  for (int n = 1; n <= 64; ++n) {
    std::vector<NodeId> nodes;
    for (int i = 0; i < n; ++i) nodes.push_back("node" + std::to_string(i));
    SlotMap map = SlotMap::equal_intervals(nodes);
    expect_partition(map);
    std::uint32_t lo = kSlotCount / n, hi = lo + (kSlotCount % n ? 1 : 0);
    for (const auto& id : nodes) {
      EXPECT_GE(map.slot_count(id), lo);
      EXPECT_LE(map.slot_count(id), hi);
    }
  }
}

TEST(SlotMap, ThreeNodeBoundaries) {
  SlotMap map = SlotMap::equal_intervals({"a", "b", "c"});
  // 16384 = 3 * 5461 + 1: the first node gets 5462 slots
  EXPECT_EQ(map.owner(0), "a");
  EXPECT_EQ(map.owner(5461), "a");
  EXPECT_EQ(map.owner(5462), "b");
  EXPECT_EQ(map.owner(10922), "b");
  EXPECT_EQ(map.owner(10923), "c");
  EXPECT_EQ(map.owner(16383), "c");
}

TEST(SlotMap, RejectsNonPartitions) {
  EXPECT_THROW(SlotMap::from_ranges({{0, 100, "a"}}), std::invalid_argument);
  EXPECT_THROW(SlotMap::from_ranges({{0, 100, "a"}, {100, 16383, "b"}}), std::invalid_argument);
  EXPECT_THROW(SlotMap::from_ranges({{0, 100, "a"}, {102, 16383, "b"}}), std::invalid_argument);
  EXPECT_THROW(SlotMap::from_ranges({{0, 10, "a"}, {11, 20, "b"}, {21, 16383, "a"}}),
               std::invalid_argument);
  EXPECT_THROW(SlotMap::equal_intervals({}), std::invalid_argument);
}

TEST(SlotMap, AdjacentRangesOfOneOwnerMerge) {
  SlotMap map = SlotMap::from_ranges({{0, 10, "a"}, {11, 20, "a"}, {21, 16383, "b"}});
  ASSERT_EQ(map.ranges().size(), 2u);
  EXPECT_EQ(map.ranges()[0].hi, 20);
}

TEST(SlotMap, ReassignKeepsPartition) {
  SlotMap map = SlotMap::equal_intervals({"a", "b", "c"});
  std::uint32_t moved = map.reassign("b", "b2");
  EXPECT_EQ(moved, 5461u);
  expect_partition(map);
  EXPECT_EQ(map.owner(6000), "b2");
  EXPECT_EQ(map.slot_count("b"), 0u);
}

TEST(SlotMap, RandomLayoutsProperty) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    int n = 1 + static_cast<int>(rng() % 20);
    std::set<std::uint16_t> cuts;
    while (static_cast<int>(cuts.size()) < n - 1) cuts.insert(1 + rng() % (kSlotCount - 1));
    std::vector<SlotRange> ranges;
    std::uint16_t lo = 0;
    int i = 0;
    for (auto c : cuts) {
      ranges.push_back({lo, static_cast<std::uint16_t>(c - 1), "n" + std::to_string(i++)});
      lo = c;
    }
    ranges.push_back({lo, kSlotCount - 1, "n" + std::to_string(i)});
    std::shuffle(ranges.begin(), ranges.end(), rng);
    SlotMap map = SlotMap::from_ranges(ranges);
    expect_partition(map);
    EXPECT_EQ(SlotMap::from_json(map.to_json()), map);
  }
}

}  // namespace
}  // namespace iotc::slotstore
