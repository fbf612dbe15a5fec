#include <gtest/gtest.h>

#include <random>

#include "bus_probe.hpp"
#include "store_cluster.hpp"
#include "temp_dir.hpp"

namespace iotc::slotstore {
namespace {

using namespace iotc::testing;

const std::vector<NodeId> kThree{"a", "b", "c"};

std::vector<NodePlan> plan_of(const std::vector<NodeId>& ids) {
  std::vector<NodePlan> p;
  for (const auto& id : ids) p.push_back({id, std::nullopt});
  return p;
}

PublishedCounts publish_at(ClusterClient& client, const HostPort& node, const std::string& topic,
                           const std::string& payload) {
  return parse_published(client.request(node, message_frame(Opcode::Publish, topic, payload)));
}

std::uint64_t subscriptions_at(StoreCluster& cluster, const NodeId& id) {
  return cluster.stats(id)["subscriptions"].get<std::uint64_t>();
}

TEST(StoreCluster, KvResultsIndependentOfEntryNode) {
  StoreCluster cluster(make_manifest(plan_of(kThree)));
  ASSERT_TRUE(cluster.wait_meshed());
  ClusterClient client(addresses(cluster.manifest()));
  const SlotMap& map = client.slot_map();
  EXPECT_EQ(map, SlotMap::equal_intervals(kThree));

  int combo = 0;
  for (const auto& entry : kThree) {
    for (const auto& owner : kThree) {
      ++combo;
      // Same command sequence on two keys with the same owner: one entering
      // at `entry`, one sent straight to the owner.
      std::string via_key = key_owned_by(map, owner, "via" + std::to_string(combo));
      std::string direct_key = key_owned_by(map, owner, "direct" + std::to_string(combo));
      auto script = [](const std::string& k) {
        return std::vector<KvCommand>{KvCommand::get(k), KvCommand::set(k, "v1"), KvCommand::get(k),
                                      KvCommand::set(k, "v2"), KvCommand::get(k), KvCommand::del(k),
                                      KvCommand::get(k), KvCommand::del(k)};
      };
      auto via = script(via_key);
      auto direct = script(direct_key);
      for (std::size_t i = 0; i < via.size(); ++i) {
        std::uint64_t before = client.redirects();
        KvReply a = client.execute_via(entry, via[i]);
        KvReply b = client.send_to(owner, direct[i]);
        EXPECT_EQ(a, b) << entry << "->" << owner << " step " << i;
        EXPECT_EQ(a.status, KvReply::Status::Ok);
        EXPECT_EQ(client.redirects() - before, entry == owner ? 0u : 1u);
      }
      // The non-owner answers MOVED with the oracle's slot and the owner.
      if (entry != owner) {
        KvReply moved = client.send_to(entry, KvCommand::get(via_key));
        EXPECT_EQ(moved.status, KvReply::Status::Moved);
        EXPECT_EQ(moved.slot, hash_slot(via_key));
        EXPECT_EQ(moved.owner, owner);
      }
    }
  }
}

TEST(StoreCluster, ReadYourWriteFromAnyNode) {
  StoreCluster cluster(make_manifest(plan_of(kThree)));
  ASSERT_TRUE(cluster.wait_meshed());
  ClusterClient client(addresses(cluster.manifest()));
  std::mt19937_64 rng(8);
  std::map<std::string, std::string> oracle;
  for (int i = 0; i < 600; ++i) {
    std::string k = "k" + std::to_string(rng() % 200);
    std::string v = std::to_string(rng());
    ASSERT_EQ(client.execute_via(kThree[rng() % 3], KvCommand::set(k, v)).status, KvReply::Status::Ok);
    oracle[k] = v;
  }
  for (const auto& [k, v] : oracle) {
    EXPECT_EQ(client.execute_via(kThree[rng() % 3], KvCommand::get(k)).value, v);
  }
}

TEST(StoreBus, ExactlyOnceForEveryPublisherSubscriberPlacement) {
  StoreCluster cluster(make_manifest(plan_of(kThree)));
  ASSERT_TRUE(cluster.wait_meshed());
  auto nodes = addresses(cluster.manifest());
  ClusterClient client(nodes);

  std::vector<std::unique_ptr<BusProbe>> subscribers;
  for (std::size_t s = 0; s < 3; ++s) {
    subscribers.push_back(std::make_unique<BusProbe>(nodes, s));
    for (std::size_t p = 0; p < 3; ++p) subscribers[s]->subscribe("t" + std::to_string(p) + std::to_string(s));
    subscribers[s]->subscribe("all");
  }
  for (std::size_t s = 0; s < 3; ++s) {
    ASSERT_TRUE(wait_until([&] { return subscriptions_at(cluster, kThree[s]) == 4; }));
  }

  for (std::size_t p = 0; p < 3; ++p) {
    for (std::size_t s = 0; s < 3; ++s) {
      std::string topic = "t" + std::to_string(p) + std::to_string(s);
      PublishedCounts c = publish_at(client, nodes[p], topic, "m");
      EXPECT_EQ(c.local, p == s ? 1u : 0u);
      EXPECT_EQ(c.forwarded, 2u);
      EXPECT_EQ(c.dropped, 0u);
    }
    publish_at(client, nodes[p], "all", "from" + std::to_string(p));
  }

  auto delivered = [&] {
    int n = 0;
    for (auto& s : subscribers) n += s->total();
    return n;
  };
  ASSERT_TRUE(wait_until([&] { return delivered() == 9 + 9; }));
  std::this_thread::sleep_for(std::chrono::milliseconds(300));  // room for duplicates to show up
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::size_t s = 0; s < 3; ++s) {
      for (std::size_t other = 0; other < 3; ++other) {
        std::string topic = "t" + std::to_string(p) + std::to_string(s);
        EXPECT_EQ(subscribers[other]->count(topic, "m"), other == s ? 1 : 0)
            << "publisher " << p << " subscriber " << s << " probe " << other;
      }
      EXPECT_EQ(subscribers[s]->count("all", "from" + std::to_string(p)), 1);
    }
  }
  EXPECT_EQ(delivered(), 18);
}

TEST(StoreBus, NoSubscribersStillForwardsToEveryPeer) {
  StoreCluster cluster(make_manifest(plan_of(kThree)));
  ASSERT_TRUE(cluster.wait_meshed());
  auto nodes = addresses(cluster.manifest());
  ClusterClient client(nodes);
  PublishedCounts c = publish_at(client, nodes[1], "nobody", "x");
  EXPECT_EQ(c.local, 0u);
  EXPECT_EQ(c.forwarded, 2u);
  for (const auto& id : kThree) {
    ASSERT_TRUE(wait_until([&] {
      return id == "b" || cluster.stats(id)["forward_received"].get<int>() == 1;
    }));
    EXPECT_EQ(cluster.stats(id)["delivered"].get<int>(), 0);
  }
}

TEST(StoreBus, UnreachablePeerCountsAsDrop) {
  StoreCluster cluster(make_manifest(plan_of({"a", "b"})));
  ASSERT_TRUE(cluster.wait_meshed());
  auto nodes = addresses(cluster.manifest());
  cluster.kill("b");
  ClusterClient client({nodes[0]});
  ASSERT_TRUE(wait_until([&] { return !cluster.stats("a")["peers"]["b"]["up"].get<bool>(); }));
  PublishedCounts c = publish_at(client, nodes[0], "t", "x");
  EXPECT_EQ(c.forwarded, 0u);
  EXPECT_EQ(c.dropped, 1u);
  EXPECT_EQ(cluster.stats("a")["forward_dropped"].get<int>(), 1);
}

TEST(StoreBus, SubscriberMovesToAnotherNodeWhenHomeDies) {
  StoreCluster cluster(make_manifest(plan_of({"a", "b"})));
  ASSERT_TRUE(cluster.wait_meshed());
  auto nodes = addresses(cluster.manifest());
  BusProbe probe(nodes, 1);
  probe.subscribe("t");
  ASSERT_TRUE(wait_until([&] { return subscriptions_at(cluster, "b") == 1; }));
  cluster.kill("b");
  ASSERT_TRUE(wait_until([&] { return subscriptions_at(cluster, "a") == 1; }));
  ClusterClient client({nodes[0]});
  publish_at(client, nodes[0], "t", "after");
  EXPECT_TRUE(wait_until([&] { return probe.count("t", "after") == 1; }));
}

TEST(StoreFailover, StandbyServesAcknowledgedWrites) {
  TempDir dir;
  StoreCluster cluster(make_manifest({{"a", {}}, {"b", {}}, {"a2", "a"}}, Replication::Strict, dir.path()));
  ASSERT_TRUE(cluster.wait_meshed());
  ClusterClient client(addresses(cluster.manifest()));
  std::map<std::string, std::string> acknowledged;
  for (int i = 0; i < 2000; ++i) {
    std::string k = "key" + std::to_string(i);
    client.set(k, "v" + std::to_string(i));
    acknowledged[k] = "v" + std::to_string(i);
  }
  cluster.kill("a");
  ASSERT_TRUE(wait_until([&] {
    ClusterClient probe({cluster.manifest().node("b").address});
    return probe.slot_map().slot_count("a2") > 0;
  }));
  ASSERT_TRUE(wait_until([&] { return cluster.stats("a2")["role"] == "promoted"; }));
  client.refresh();
  EXPECT_EQ(client.slot_map().slot_count("a"), 0u);
  for (const auto& [k, v] : acknowledged) ASSERT_EQ(client.get(k), v) << k;
  // The promoted standby keeps accepting writes.
  std::string k = key_owned_by(client.slot_map(), "a2", "post");
  client.set(k, "x");
  EXPECT_EQ(client.get(k), "x");
}

TEST(StoreFailover, NoStandbyMeansThoseSlotsError) {
  StoreCluster cluster(make_manifest(plan_of({"a", "b"})));
  ASSERT_TRUE(cluster.wait_meshed());
  ClusterClient client(addresses(cluster.manifest()));
  std::string on_a = key_owned_by(client.slot_map(), "a");
  std::string on_b = key_owned_by(client.slot_map(), "b");
  client.set(on_a, "1");
  client.set(on_b, "2");
  cluster.kill("b");
  EXPECT_THROW(client.get(on_b), RoutingError);
  EXPECT_EQ(client.get(on_a), "1");
}

TEST(StoreFailover, ZeroWritesThenFailover) {
  StoreCluster cluster(make_manifest({{"a", {}}, {"a2", "a"}}, Replication::Strict));
  ASSERT_TRUE(cluster.wait_meshed());
  cluster.kill("a");
  ClusterClient client({cluster.manifest().node("a2").address});
  ASSERT_TRUE(wait_until([&] {
    client.refresh();
    return client.slot_map().slot_count("a2") == kSlotCount;
  }));
  EXPECT_EQ(client.get("anything"), std::nullopt);
}

TEST(StoreReplication, LateStandbyCatchesUpFromPrimaryLog) {
  TempDir dir;
  auto manifest = make_manifest({{"a", {}}, {"a2", "a"}}, Replication::Async, dir.path());
  auto primary = std::make_unique<NodeRunner>(manifest, "a");
  ClusterClient client({manifest.node("a").address});
  for (int i = 0; i < 300; ++i) client.set("k" + std::to_string(i), std::to_string(i));
  // Restart the primary so its in-memory ship buffer is gone and catch-up
  // has to come from the log file.
  primary->kill();
  primary = std::make_unique<NodeRunner>(manifest, "a");
  NodeRunner standby(manifest, "a2");
  ClusterClient admin({manifest.node("a2").address});
  ASSERT_TRUE(wait_until([&] {
    return admin.admin(manifest.node("a2").address, Opcode::Stats)["last_sequence"] == 300;
  }));
  client.set("k-new", "1");
  ASSERT_TRUE(wait_until([&] {
    return admin.admin(manifest.node("a2").address, Opcode::Stats)["last_sequence"] == 301;
  }));
}

TEST(StoreNodeRecovery, RestartReplaysLog) {
  TempDir dir;
  auto manifest = make_manifest(plan_of({"a"}), Replication::Async, dir.path());
  {
    NodeRunner a(manifest, "a");
    ClusterClient client({manifest.node("a").address});
    for (int i = 0; i < 100; ++i) client.set("k" + std::to_string(i), std::to_string(i * i));
    client.del("k7");
  }
  NodeRunner a(manifest, "a");
  ClusterClient client({manifest.node("a").address});
  EXPECT_EQ(client.get("k9"), "81");
  EXPECT_EQ(client.get("k7"), std::nullopt);
}

}  // namespace
}  // namespace iotc::slotstore
