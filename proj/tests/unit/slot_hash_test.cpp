#include "iotc/slotstore/crc16.hpp"
#include "iotc/slotstore/slot_map.hpp"

#include <gtest/gtest.h>

#include <random>

#include "crc16_oracle.hpp"

namespace iotc::slotstore {
namespace {

// Recorded from oracle::crc16_bitwise before the table version existed.
constexpr std::uint16_t kFooSlot = 12182;
// Chi-square, 7 degrees of freedom, upper 0.001 tail.
constexpr double kChiSquare7Dof999 = 24.322;

std::string random_key(std::mt19937_64& rng, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::string k(len(rng), '\0');
  for (auto& c : k) c = static_cast<char>(rng() & 0xFF);
  return k;
}

TEST(HashSlot, OracleCheckValues) {
  EXPECT_EQ(oracle::crc16_bitwise("123456789"), 0x31C3);
  EXPECT_EQ(oracle::crc16_bitwise("foo") % kSlotCount, kFooSlot);
}

TEST(HashSlot, KnownVectors) {
  EXPECT_EQ(hash_slot(""), 0);
  EXPECT_EQ(crc16("123456789"), 0x31C3);
  EXPECT_EQ(hash_slot("123456789"), 12739);
  EXPECT_EQ(hash_slot("foo"), kFooSlot);
}

TEST(HashSlot, TableAgreesWithBitwiseOnAMillionKeys) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1'000'000; ++i) {
    std::string k = random_key(rng, 40);
    ASSERT_EQ(crc16(k), oracle::crc16_bitwise(k)) << i;
  }
}

TEST(HashSlot, UniformOverEightEqualIntervals) {
  std::vector<NodeId> nodes;
  for (int i = 0; i < 8; ++i) nodes.push_back("n" + std::to_string(i));
  SlotMap map = SlotMap::equal_intervals(nodes);
  std::map<NodeId, int> counts;
  std::mt19937_64 rng(2);
  const int kKeys = 100'000;
  for (int i = 0; i < kKeys; ++i) {
    std::string k(16, '\0');
    for (auto& c : k) c = static_cast<char>(rng() & 0xFF);
    ++counts[map.route(k)];
  }
  const double expected = kKeys / 8.0;
  double chi2 = 0;
  for (const auto& n : nodes) {
    int c = counts[n];
    EXPECT_GE(c, expected * 0.9) << n;
    EXPECT_LE(c, expected * 1.1) << n;
    chi2 += (c - expected) * (c - expected) / expected;
  }
  EXPECT_LT(chi2, kChiSquare7Dof999);
}

TEST(Route, SingleNodeOwnsEverything) {
  SlotMap map = SlotMap::single("only");
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(map.route(random_key(rng, 20)), "only");
}

TEST(Route, EightNodeLayout) {
  std::vector<NodeId> nodes;
  for (int i = 0; i < 8; ++i) nodes.push_back("n" + std::to_string(i));
  SlotMap map = SlotMap::equal_intervals(nodes);
  // 12739 / 2048 = 6 -> [12288, 14335]
  EXPECT_EQ(map.route("123456789"), "n6");
  EXPECT_EQ(map.ranges()[6].lo, 12288);
  EXPECT_EQ(map.ranges()[6].hi, 14335);
}

TEST(Route, EqualSlotsSameNode) {
  SlotMap map = SlotMap::equal_intervals({"a", "b", "c"});
  std::mt19937_64 rng(4);
  std::map<std::uint16_t, NodeId> seen;
  for (int i = 0; i < 50000; ++i) {
    std::string k = random_key(rng, 12);
    auto [it, fresh] = seen.emplace(hash_slot(k), map.route(k));
    if (!fresh) {
      ASSERT_EQ(it->second, map.route(k));
    }
  }
}

}  // namespace
}  // namespace iotc::slotstore
