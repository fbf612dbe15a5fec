#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "iotc/common/host_port.hpp"

namespace iotc::slotstore {
class ClusterClient;
}

namespace iotc::http {

struct Resource {
  std::string body;
  std::string content_type = "application/octet-stream";
  friend bool operator==(const Resource&, const Resource&) = default;
};

class ResourceStore {
 public:
  virtual ~ResourceStore() = default;
  virtual std::optional<Resource> get(const std::string& path) = 0;
  // Returns true if the path did not exist before.
  virtual bool put(const std::string& path, Resource r) = 0;
  // Returns true if something was removed.
  virtual bool remove(const std::string& path) = 0;
};

class MemoryStore : public ResourceStore {
 public:
  std::optional<Resource> get(const std::string& path) override;
  bool put(const std::string& path, Resource r) override;
  bool remove(const std::string& path) override;
  std::size_t size() const;

 private:
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, Resource> items_;
};

// Resources kept in the slot-store cluster under key "http:" + path. The
// stored value is the content type, a NUL byte, then the body.
class SlotStore : public ResourceStore {
 public:
  explicit SlotStore(std::vector<HostPort> seeds);
  ~SlotStore() override;
  std::optional<Resource> get(const std::string& path) override;
  bool put(const std::string& path, Resource r) override;
  bool remove(const std::string& path) override;

 private:
  std::mutex mu_;
  std::unique_ptr<slotstore::ClusterClient> client_;
};

}  // namespace iotc::http
