#include "iotc/slotstore/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <toml.hpp>

namespace iotc::slotstore {

ClusterManifest ClusterManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.parent_path());
}

ClusterManifest ClusterManifest::parse(std::string_view text, const std::filesystem::path& base_dir) {
  toml::table doc;
  try {
    doc = toml::parse(text);
  } catch (const toml::parse_error& e) {
    throw std::invalid_argument(std::string("manifest: ") + std::string(e.description()));
  }
  ClusterManifest m;
  if (auto* cluster = doc["cluster"].as_table()) {
    std::string rep = (*cluster)["replication"].value_or(std::string("async"));
    if (rep == "strict") {
      m.replication = Replication::Strict;
    } else if (rep != "async") {
      throw std::invalid_argument("manifest: replication must be \"async\" or \"strict\"");
    }
    m.ping_interval = std::chrono::milliseconds((*cluster)["ping_interval_ms"].value_or(int64_t{1000}));
    m.ping_misses = static_cast<int>((*cluster)["ping_misses"].value_or(int64_t{3}));
    if (m.ping_interval.count() <= 0 || m.ping_misses <= 0) {
      throw std::invalid_argument("manifest: ping settings must be positive");
    }
  }
  auto* nodes = doc["node"].as_array();
  if (!nodes || nodes->empty()) throw std::invalid_argument("manifest: no [[node]] entries");
  for (auto& entry : *nodes) {
    auto* t = entry.as_table();
    if (!t) throw std::invalid_argument("manifest: [[node]] must be a table");
    NodeSpec spec;
    auto id = (*t)["id"].value<std::string>();
    auto addr = (*t)["address"].value<std::string>();
    if (!id || id->empty() || !addr) throw std::invalid_argument("manifest: node needs id and address");
    spec.id = *id;
    spec.address = parse_host_port(*addr);
    if (auto* slots = (*t)["slots"].as_array()) {
      auto lo = slots->size() == 2 ? (*slots)[0].value<int64_t>() : std::nullopt;
      auto hi = slots->size() == 2 ? (*slots)[1].value<int64_t>() : std::nullopt;
      if (!lo || !hi || *lo < 0 || *hi >= kSlotCount || *hi < *lo) {
        throw std::invalid_argument("manifest: node " + spec.id + " has bad slots");
      }
      spec.slots = SlotRange{static_cast<std::uint16_t>(*lo), static_cast<std::uint16_t>(*hi), spec.id};
    }
    if (auto s = (*t)["standby_of"].value<std::string>()) spec.standby_of = *s;
    if (auto l = (*t)["log"].value<std::string>()) {
      std::filesystem::path p(*l);
      spec.log = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    m.nodes.push_back(std::move(spec));
  }
  m.validate();
  return m;
}

std::string ClusterManifest::to_toml() const {
  std::ostringstream out;
  out << "[cluster]\n"
      << "replication = \"" << (replication == Replication::Strict ? "strict" : "async") << "\"\n"
      << "ping_interval_ms = " << ping_interval.count() << "\n"
      << "ping_misses = " << ping_misses << "\n";
  for (const auto& n : nodes) {
    toml::table t;
    t.insert("id", n.id);
    t.insert("address", n.address.str());
    if (n.slots) t.insert("slots", toml::array{int64_t{n.slots->lo}, int64_t{n.slots->hi}});
    if (n.standby_of) t.insert("standby_of", *n.standby_of);
    if (n.log) t.insert("log", n.log->string());
    out << "\n[[node]]\n" << t << "\n";
  }
  return out.str();
}

void ClusterManifest::validate() const {
  std::set<NodeId> ids;
  for (const auto& n : nodes) {
    if (!ids.insert(n.id).second) throw std::invalid_argument("manifest: duplicate node " + n.id);
  }
  std::set<NodeId> covered;
  for (const auto& n : nodes) {
    if (!n.standby_of) continue;
    if (n.slots) throw std::invalid_argument("manifest: standby " + n.id + " must not own slots");
    const NodeSpec* primary = nullptr;
    for (const auto& p : nodes) {
      if (p.id == *n.standby_of) primary = &p;
    }
    if (!primary) throw std::invalid_argument("manifest: " + n.id + " is standby of unknown node");
    if (primary->standby_of) throw std::invalid_argument("manifest: standby of a standby: " + n.id);
    if (!covered.insert(primary->id).second) {
      throw std::invalid_argument("manifest: node " + primary->id + " has two standbys");
    }
  }
  initial_slot_map();  // throws if explicit slots do not partition
}

const NodeSpec& ClusterManifest::node(const NodeId& id) const {
  for (const auto& n : nodes) {
    if (n.id == id) return n;
  }
  throw std::out_of_range("no node " + id + " in manifest");
}

std::vector<NodeId> ClusterManifest::primaries() const {
  std::vector<NodeId> out;
  for (const auto& n : nodes) {
    if (!n.standby_of) out.push_back(n.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<NodeId> ClusterManifest::standby_for(const NodeId& primary) const {
  for (const auto& n : nodes) {
    if (n.standby_of == primary) return n.id;
  }
  return std::nullopt;
}

SlotMap ClusterManifest::initial_slot_map() const {
  std::vector<SlotRange> explicit_ranges;
  std::size_t primary_count = 0;
  for (const auto& n : nodes) {
    if (n.standby_of) continue;
    ++primary_count;
    if (n.slots) explicit_ranges.push_back(*n.slots);
  }
  if (primary_count == 0) throw std::invalid_argument("manifest: no primary nodes");
  if (explicit_ranges.empty()) return SlotMap::equal_intervals(primaries());
  if (explicit_ranges.size() != primary_count) {
    throw std::invalid_argument("manifest: give slots for every primary or for none");
  }
  return SlotMap::from_ranges(std::move(explicit_ranges));
}

}  // namespace iotc::slotstore
