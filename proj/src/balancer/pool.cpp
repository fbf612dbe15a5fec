#include "iotc/balancer/pool.hpp"

#include <algorithm>
#include <charconv>

namespace iotc::balancer {

bool id_less(const std::string& a, const std::string& b) {
  auto numeric = [](const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  if (numeric(a) && numeric(b)) {
    std::string_view x(a), y(b);
    while (x.size() > 1 && x.front() == '0') x.remove_prefix(1);
    while (y.size() > 1 && y.front() == '0') y.remove_prefix(1);
    if (x.size() != y.size()) return x.size() < y.size();
    return x < y;
  }
  return a < b;
}

BackendSpec parse_backend_spec(std::string_view text) {
  BackendSpec spec;
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    spec.pool = std::string(text.substr(0, slash));
    text.remove_prefix(slash + 1);
    if (spec.pool.empty()) throw std::invalid_argument("empty pool name in backend spec");
  }
  // host:port or host:port:weight
  std::size_t first = text.find(':');
  std::size_t last = text.rfind(':');
  if (first != last) {
    std::string_view w = text.substr(last + 1);
    auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), spec.weight);
    if (ec != std::errc() || p != w.data() + w.size() || spec.weight <= 0) {
      throw std::invalid_argument("bad backend weight: " + std::string(w));
    }
    text = text.substr(0, last);
  }
  spec.address = parse_host_port(text);
  return spec;
}

BackendPool::BackendPool(std::string name, std::vector<Backend> backends)
    : name_(std::move(name)), backends_(std::move(backends)) {
  if (backends_.empty()) throw std::invalid_argument("pool " + name_ + " has no backends");
  for (std::size_t i = 0; i < backends_.size(); ++i) {
    if (backends_[i].id.empty()) backends_[i].id = std::to_string(i);
    if (backends_[i].weight <= 0) throw std::invalid_argument("backend weight must be positive");
  }
}

std::size_t BackendPool::wrr_locked(std::optional<std::size_t> exclude) {
  std::int64_t total = 0;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < backends_.size(); ++i) {
    Backend& b = backends_[i];
    if (!b.healthy || i == exclude) continue;
    b.current += b.weight;
    total += b.weight;
    if (!best || b.current > backends_[*best].current) best = i;
  }
  if (!best) throw NoBackendError("no healthy backend in pool " + name_);
  backends_[*best].current -= total;
  return *best;
}

std::size_t BackendPool::least_conn_locked(std::optional<std::size_t> exclude) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < backends_.size(); ++i) {
    const Backend& b = backends_[i];
    if (!b.healthy || i == exclude) continue;
    if (!best) {
      best = i;
      continue;
    }
    const Backend& cur = backends_[*best];
    if (b.active < cur.active || (b.active == cur.active && id_less(b.id, cur.id))) best = i;
  }
  if (!best) throw NoBackendError("no healthy backend in pool " + name_);
  return *best;
}

std::size_t BackendPool::acquire(Policy policy, std::optional<std::size_t> exclude) {
  std::lock_guard lock(mu_);
  std::size_t i = policy == Policy::WeightedRoundRobin ? wrr_locked(exclude) : least_conn_locked(exclude);
  ++backends_[i].active;
  ++backends_[i].selected;
  return i;
}

void BackendPool::release(std::size_t index) {
  std::lock_guard lock(mu_);
  if (backends_.at(index).active <= 0) throw std::logic_error("active connection count underflow");
  --backends_[index].active;
}

void BackendPool::note_connect_failure(std::size_t index) {
  std::lock_guard lock(mu_);
  ++backends_.at(index).connect_failures;
}

bool BackendPool::report_health(std::size_t index, bool ok, std::int64_t now_ms) {
  std::lock_guard lock(mu_);
  Backend& b = backends_.at(index);
  b.last_check_ms = now_ms;
  if (ok) {
    b.fail_streak = 0;
    ++b.ok_streak;
    if (!b.healthy && b.ok_streak >= 2) {
      b.healthy = true;
      b.current = 0;
      return true;
    }
  } else {
    b.ok_streak = 0;
    ++b.fail_streak;
    if (b.healthy && b.fail_streak >= 2) {
      b.healthy = false;
      return true;
    }
  }
  return false;
}

Backend BackendPool::snapshot(std::size_t index) const {
  std::lock_guard lock(mu_);
  return backends_.at(index);
}

std::vector<Backend> BackendPool::snapshot() const {
  std::lock_guard lock(mu_);
  return backends_;
}

std::int64_t BackendPool::total_active() const {
  std::lock_guard lock(mu_);
  std::int64_t n = 0;
  for (const auto& b : backends_) n += b.active;
  return n;
}

nlohmann::json BackendPool::to_json() const {
  std::lock_guard lock(mu_);
  auto arr = nlohmann::json::array();
  for (const auto& b : backends_) {
    arr.push_back({{"id", b.id},
                   {"address", b.address.str()},
                   {"weight", b.weight},
                   {"active", b.active},
                   {"healthy", b.healthy},
                   {"selected", b.selected},
                   {"connect_failures", b.connect_failures},
                   {"last_check_ms", b.last_check_ms}});
  }
  return arr;
}

}  // namespace iotc::balancer
