#include "iotc/broker/subscriptions.hpp"

namespace iotc::broker {

bool SubscriptionTable::add(const std::string& topic, SessionId session, std::uint8_t qos) {
  auto& subs = by_topic_[topic];
  bool first = subs.empty();
  subs[session] = qos;
  by_session_[session][topic] = qos;
  return first;
}

bool SubscriptionTable::remove(const std::string& topic, SessionId session) {
  auto it = by_topic_.find(topic);
  if (it == by_topic_.end() || it->second.erase(session) == 0) return false;
  if (auto s = by_session_.find(session); s != by_session_.end()) {
    s->second.erase(topic);
    if (s->second.empty()) by_session_.erase(s);
  }
  if (it->second.empty()) {
    by_topic_.erase(it);
    return true;
  }
  return false;
}

std::vector<std::string> SubscriptionTable::remove_session(SessionId session) {
  std::vector<std::string> emptied;
  auto s = by_session_.find(session);
  if (s == by_session_.end()) return emptied;
  std::map<std::string, std::uint8_t> topics = std::move(s->second);
  by_session_.erase(s);
  for (const auto& [topic, qos] : topics) {
    auto it = by_topic_.find(topic);
    if (it == by_topic_.end()) continue;
    it->second.erase(session);
    if (it->second.empty()) {
      by_topic_.erase(it);
      emptied.push_back(topic);
    }
  }
  return emptied;
}

std::vector<std::pair<SessionId, std::uint8_t>> SubscriptionTable::subscribers(const std::string& topic) const {
  std::vector<std::pair<SessionId, std::uint8_t>> out;
  auto it = by_topic_.find(topic);
  if (it != by_topic_.end()) out.assign(it->second.begin(), it->second.end());
  return out;
}

std::size_t SubscriptionTable::subscription_count() const {
  std::size_t n = 0;
  for (const auto& [topic, subs] : by_topic_) n += subs.size();
  return n;
}

}  // namespace iotc::broker
