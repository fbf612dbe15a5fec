#pragma once

#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include "iotc/common/asio.hpp"
#include "iotc/common/event_log.hpp"

namespace iotc::tools {

// "-" is stdout, "" disables, anything else is appended to.
class EventSink {
 public:
  explicit EventSink(const std::string& where) {
    if (where == "-") {
      log_ = std::make_unique<EventLog>(&std::cout);
    } else if (!where.empty()) {
      file_.open(where, std::ios::app);
      if (!file_) throw std::runtime_error("cannot open event log " + where);
      log_ = std::make_unique<EventLog>(&file_);
    }
  }
  EventLog* get() { return log_.get(); }

 private:
  std::ofstream file_;
  std::unique_ptr<EventLog> log_;
};

// Runs io until SIGINT/SIGTERM, then calls on_stop and drains.
template <typename OnStop>
void run_until_signal(asio::io_context& io, OnStop on_stop) {
  asio::signal_set signals(io, SIGINT, SIGTERM);
  signals.async_wait([&](const error_code& ec, int) {
    if (ec) return;
    on_stop();
    io.stop();
  });
  io.run();
}

inline tcp::endpoint to_endpoint(const HostPort& hp) {
  return {asio::ip::make_address(hp.host), hp.port};
}

}  // namespace iotc::tools
