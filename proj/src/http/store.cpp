#include "iotc/http/store.hpp"

#include "iotc/slotstore/client.hpp"

namespace iotc::http {

std::optional<Resource> MemoryStore::get(const std::string& path) {
  std::shared_lock lock(mu_);
  auto it = items_.find(path);
  if (it == items_.end()) return std::nullopt;
  return it->second;
}

bool MemoryStore::put(const std::string& path, Resource r) {
  std::unique_lock lock(mu_);
  return items_.insert_or_assign(path, std::move(r)).second;
}

bool MemoryStore::remove(const std::string& path) {
  std::unique_lock lock(mu_);
  return items_.erase(path) > 0;
}

std::size_t MemoryStore::size() const {
  std::shared_lock lock(mu_);
  return items_.size();
}

namespace {

std::string key_for(const std::string& path) { return "http:" + path; }

}  // namespace

SlotStore::SlotStore(std::vector<HostPort> seeds)
    : client_(std::make_unique<slotstore::ClusterClient>(std::move(seeds))) {}

SlotStore::~SlotStore() = default;

std::optional<Resource> SlotStore::get(const std::string& path) {
  std::lock_guard lock(mu_);
  auto v = client_->get(key_for(path));
  if (!v) return std::nullopt;
  Resource r;
  auto nul = v->find('\0');
  if (nul == std::string::npos) {
    r.body = std::move(*v);
  } else {
    r.content_type = v->substr(0, nul);
    r.body = v->substr(nul + 1);
  }
  return r;
}

bool SlotStore::put(const std::string& path, Resource r) {
  std::lock_guard lock(mu_);
  // Read-then-write: fine under the single-writer-per-key use the service makes of it.
  bool existed = client_->get(key_for(path)).has_value();
  std::string value = r.content_type;
  value.push_back('\0');
  value += r.body;
  client_->set(key_for(path), value);
  return !existed;
}

bool SlotStore::remove(const std::string& path) {
  std::lock_guard lock(mu_);
  return client_->del(key_for(path));
}

}  // namespace iotc::http
