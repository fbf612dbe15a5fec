#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace iotc::broker {

using SessionId = std::uint64_t;

// topic -> {session -> max qos} for one broker instance.
class SubscriptionTable {
 public:
  // Returns true when `topic` had no subscriber before.
  bool add(const std::string& topic, SessionId session, std::uint8_t qos);
  // Returns true when the last subscriber of `topic` left.
  bool remove(const std::string& topic, SessionId session);
  // Drops every subscription of `session`; returns topics left without subscribers.
  std::vector<std::string> remove_session(SessionId session);

  std::vector<std::pair<SessionId, std::uint8_t>> subscribers(const std::string& topic) const;
  std::size_t topic_count() const { return by_topic_.size(); }
  std::size_t subscription_count() const;

 private:
  std::unordered_map<std::string, std::map<SessionId, std::uint8_t>> by_topic_;
  std::unordered_map<SessionId, std::map<std::string, std::uint8_t>> by_session_;
};

}  // namespace iotc::broker
