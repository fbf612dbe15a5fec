#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "iotc/common/asio.hpp"

namespace iotc {

// Write queue for one socket. push() never blocks; run() is the single writer
// coroutine and must be co_spawned once per connection. All calls happen on the
// socket's (single-threaded) executor.
class Outbox {
 public:
  explicit Outbox(tcp::socket& socket)
      : socket_(socket), wake_(socket.get_executor()) {}

  void push(std::vector<std::uint8_t> bytes) {
    if (closed_) return;
    queued_bytes_ += bytes.size();
    queue_.push_back(std::move(bytes));
    wake_.cancel();
  }

  // Stops the writer once the queue has drained.
  void close() {
    closed_ = true;
    wake_.cancel();
  }

  bool closed() const { return closed_; }
  std::size_t queued_bytes() const { return queued_bytes_; }

  awaitable<void> run() {
    std::deque<std::vector<std::uint8_t>> batch;
    std::vector<asio::const_buffer> buffers;
    for (;;) {
      if (queue_.empty()) {
        if (closed_) co_return;
        wake_.expires_at(Clock::time_point::max());
        error_code ec;
        co_await wake_.async_wait(asio::redirect_error(use_awaitable, ec));
        continue;
      }
      batch.clear();
      batch.swap(queue_);
      buffers.clear();
      std::size_t total = 0;
      for (const auto& b : batch) {
        buffers.emplace_back(asio::buffer(b));
        total += b.size();
      }
      error_code ec;
      co_await asio::async_write(socket_, buffers, asio::redirect_error(use_awaitable, ec));
      queued_bytes_ -= total;
      if (ec) {
        closed_ = true;
        queue_.clear();
        queued_bytes_ = 0;
        co_return;
      }
    }
  }

 private:
  tcp::socket& socket_;
  asio::steady_timer wake_;
  std::deque<std::vector<std::uint8_t>> queue_;
  std::size_t queued_bytes_ = 0;
  bool closed_ = false;
};

}  // namespace iotc
