#pragma once

#include <iosfwd>
#include <mutex>
#include <string_view>

#include <json.hpp>

namespace iotc {

// One JSON object per line. Each record gets "ts_ms" and "event" keys.
class EventLog {
 public:
  explicit EventLog(std::ostream* out = nullptr) : out_(out) {}

  bool enabled() const { return out_ != nullptr; }
  void emit(std::string_view event, nlohmann::json fields = nlohmann::json::object());

 private:
  std::ostream* out_;
  std::mutex mu_;
};

}  // namespace iotc
