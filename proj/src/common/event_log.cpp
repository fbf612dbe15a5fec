#include "iotc/common/event_log.hpp"

#include <chrono>
#include <ostream>

namespace iotc {

void EventLog::emit(std::string_view event, nlohmann::json fields) {
  if (!out_) return;
  auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                 std::chrono::system_clock::now().time_since_epoch())
                 .count();
  fields["ts_ms"] = now;
  fields["event"] = event;
  std::lock_guard lock(mu_);
  *out_ << fields.dump() << '\n';
  out_->flush();
}

}  // namespace iotc
