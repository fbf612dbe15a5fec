#pragma once

#include <chrono>

#include "iotc/common/asio.hpp"
#include "iotc/common/host_port.hpp"

namespace iotc::balancer {

// Resolves and connects `socket`, giving up after `timeout`. Returns the
// error (operation_aborted-style timed_out on expiry); the socket is open and
// connected on success.
awaitable<error_code> connect_with_timeout(tcp::socket& socket, const HostPort& target,
                                           std::chrono::milliseconds timeout);

// Closes `socket` if it is still busy when the deadline passes. cancel() it
// before the guarded operation's owner goes away.
class Deadline {
 public:
  Deadline(tcp::socket& socket, std::chrono::milliseconds timeout);
  ~Deadline() { cancel(); }
  void cancel();
  bool expired() const { return state_->expired; }

 private:
  struct State {
    tcp::socket* socket;
    bool done = false;
    bool expired = false;
  };
  std::shared_ptr<State> state_;
  asio::steady_timer timer_;
};

}  // namespace iotc::balancer
