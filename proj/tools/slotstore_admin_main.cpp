#include <CLI11.hpp>

#include <iostream>

#include "iotc/slotstore/client.hpp"
#include "iotc/slotstore/manifest.hpp"

using namespace iotc;
using namespace iotc::slotstore;

int main(int argc, char** argv) {
  CLI::App app{"Slot-store administration"};
  std::string config;
  std::vector<std::string> seeds;
  app.add_option("--config", config, "cluster manifest (TOML)")->check(CLI::ExistingFile);
  app.add_option("--seed", seeds, "node address host:port (instead of --config)");
  app.require_subcommand(1);

  auto* slots = app.add_subcommand("slots", "print the slot map as seen by one node");
  auto* stats = app.add_subcommand("stats", "print per-node statistics");
  std::string stats_node;
  stats->add_option("node", stats_node, "only this node");
  auto* failover = app.add_subcommand("failover", "fail a primary over to its standby on every node");
  std::string failed;
  failover->add_option("id", failed, "node to fail over")->required();
  CLI11_PARSE(app, argc, argv);

  try {
    std::vector<std::pair<std::string, HostPort>> nodes;
    if (!config.empty()) {
      for (const auto& n : ClusterManifest::load(config).nodes) nodes.emplace_back(n.id, n.address);
    }
    for (const auto& s : seeds) nodes.emplace_back(s, parse_host_port(s));
    if (nodes.empty()) throw std::invalid_argument("need --config or --seed");
    std::vector<HostPort> addrs;
    for (const auto& [id, a] : nodes) addrs.push_back(a);

    ClusterClient client(addrs);
    nlohmann::json out;
    if (*slots) {
      std::string last_error;
      for (const auto& a : addrs) {
        try {
          out = client.admin(a, Opcode::Slots);
          break;
        } catch (const std::exception& e) {
          last_error = e.what();
        }
      }
      if (out.is_null()) throw std::runtime_error("no node reachable: " + last_error);
    } else if (*stats) {
      out = nlohmann::json::object();
      for (const auto& [id, a] : nodes) {
        if (!stats_node.empty() && stats_node != id) continue;
        try {
          out[id] = client.admin(a, Opcode::Stats);
        } catch (const std::exception& e) {
          out[id] = {{"error", e.what()}};
        }
      }
    } else if (*failover) {
      out = nlohmann::json::object();
      for (const auto& [id, a] : nodes) {
        if (id == failed) continue;
        try {
          out[id] = client.admin(a, Opcode::Failover, failed);
        } catch (const std::exception& e) {
          out[id] = {{"error", e.what()}};
        }
      }
    }
    std::cout << out.dump(2) << "\n";
  } catch (const std::exception& e) {
    std::cerr << "slotstore-admin: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
