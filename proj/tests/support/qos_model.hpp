#pragma once

// Bounded exhaustive exploration of one QoS message travelling between two
// QosSession instances. Each direction is FIFO (one TCP stream); the head
// packet may be delivered, delivered-and-repeated, or dropped, and the sender
// may time out and retransmit at any point. Direction interleaving is free.

#include <cstdint>
#include <vector>

#include "iotc/mqtt/qos.hpp"

namespace iotc::mqtt::model {

struct Budget {
  int depth = 9;
  int timeouts = 2;
  int duplications = 2;
  int drops = 2;
};

struct ExploreStats {
  std::uint64_t states = 0;
  std::uint64_t terminal_runs = 0;
  std::uint64_t completed_runs = 0;  // sender's outbound map drained
  std::uint64_t violations = 0;      // more than one delivery, or zero at completion
  std::uint64_t max_receiver_events = 0;
};

struct World {
  QosSession sender;
  QosSession receiver;
  std::vector<Packet> to_receiver;
  std::vector<Packet> to_sender;
  int deliveries = 0;
  int receiver_events = 0;
  Budget budget;
};

inline void apply_step(World& w, const QosStep& s, bool from_sender) {
  auto& dest = from_sender ? w.to_receiver : w.to_sender;
  for (const auto& p : s.actions) dest.push_back(p);
  w.deliveries += static_cast<int>(s.deliveries.size());
}

inline void explore(const World& w, ExploreStats& stats) {
  ++stats.states;
  if (w.deliveries > 1) {
    ++stats.violations;
    return;
  }
  bool moved = false;
  if (w.budget.depth > 0) {
    auto net_actions = [&](bool to_receiver) {
      const auto& queue = to_receiver ? w.to_receiver : w.to_sender;
      if (queue.empty()) return;
      for (int mode = 0; mode < 3; ++mode) {  // 0 deliver, 1 deliver and repeat, 2 drop
        if (mode == 1 && w.budget.duplications == 0) continue;
        if (mode == 2 && w.budget.drops == 0) continue;
        World next = w;
        --next.budget.depth;
        auto& q = to_receiver ? next.to_receiver : next.to_sender;
        Packet p = q.front();
        if (mode == 1) {
          --next.budget.duplications;
        } else {
          q.erase(q.begin());
        }
        if (mode == 2) {
          --next.budget.drops;
        } else if (to_receiver) {
          ++next.receiver_events;
          apply_step(next, next.receiver.step(Received{p}), false);
        } else {
          apply_step(next, next.sender.step(Received{p}), true);
        }
        moved = true;
        explore(next, stats);
      }
    };
    net_actions(true);
    net_actions(false);
    if (w.budget.timeouts > 0) {
      for (const auto& [id, entry] : w.sender.outbound()) {
        World next = w;
        --next.budget.depth;
        --next.budget.timeouts;
        apply_step(next, next.sender.step(AckTimeout{id}), true);
        moved = true;
        explore(next, stats);
      }
    }
  }
  if (!moved) {
    ++stats.terminal_runs;
    if (static_cast<std::uint64_t>(w.receiver_events) > stats.max_receiver_events) {
      stats.max_receiver_events = static_cast<std::uint64_t>(w.receiver_events);
    }
    if (w.sender.outbound().empty()) {
      ++stats.completed_runs;
      if (w.deliveries != 1) ++stats.violations;
    }
  }
}

// Explores every schedule for a single publish at `qos`.
inline ExploreStats explore_single_message(std::uint8_t qos, Budget budget = {}) {
  World w;
  w.budget = budget;
  apply_step(w, w.sender.step(OutboundPublish{"t", "payload", qos}), true);
  ExploreStats stats;
  explore(w, stats);
  return stats;
}

}  // namespace iotc::mqtt::model
