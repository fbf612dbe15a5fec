#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "iotc/common/asio.hpp"
#include "iotc/http/service.hpp"

namespace iotc::testing {

// Answers GET requests with the bench page at a fixed rate: requests from all
// connections share one FIFO of send slots spaced 1/capacity apart. Records
// the time of every response it writes.
class RateLimitedHttp {
 public:
  explicit RateLimitedHttp(double capacity)
      : spacing_(std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / capacity))),
        acceptor_(io_, {asio::ip::make_address("127.0.0.1"), 0}) {
    port_ = acceptor_.local_endpoint().port();
    std::string body = http::bench_page();
    response_ = "HTTP/1.1 200 OK\r\nContent-Length: " + std::to_string(body.size()) + "\r\n\r\n" + body;
    asio::co_spawn(io_, accept_loop(), asio::detached);
    thread_ = std::thread([this] { io_.run(); });
  }
  ~RateLimitedHttp() {
    asio::post(io_, [this] { io_.stop(); });
    thread_.join();
  }
  std::uint16_t port() const { return port_; }

  // Responses written inside [from, to].
  std::size_t answered_between(Clock::time_point from, Clock::time_point to) {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (auto t : sent_) n += t >= from && t <= to;
    return n;
  }

 private:
  awaitable<void> accept_loop() {
    for (;;) {
      error_code ec;
      tcp::socket s = co_await acceptor_.async_accept(asio::redirect_error(use_awaitable, ec));
      if (ec) co_return;
      asio::co_spawn(io_, serve(std::make_shared<tcp::socket>(std::move(s))), asio::detached);
    }
  }

  awaitable<void> serve(std::shared_ptr<tcp::socket> s) {
    std::string buf;
    char chunk[4096];
    asio::steady_timer slot(io_);
    for (;;) {
      error_code ec;
      auto end = buf.find("\r\n\r\n");
      if (end == std::string::npos) {
        std::size_t n = co_await s->async_read_some(asio::buffer(chunk), asio::redirect_error(use_awaitable, ec));
        if (ec) co_return;
        buf.append(chunk, n);
        continue;
      }
      buf.erase(0, end + 4);
      auto now = Clock::now();
      next_ = std::max(next_, now);
      slot.expires_at(next_);
      next_ += spacing_;
      co_await slot.async_wait(asio::redirect_error(use_awaitable, ec));
      co_await asio::async_write(*s, asio::buffer(response_), asio::redirect_error(use_awaitable, ec));
      if (ec) co_return;
      std::lock_guard lock(mu_);
      sent_.push_back(Clock::now());
    }
  }

  Clock::duration spacing_;
  Clock::time_point next_{};
  asio::io_context io_;
  tcp::acceptor acceptor_;
  std::uint16_t port_ = 0;
  std::string response_;
  std::thread thread_;
  std::mutex mu_;
  std::vector<Clock::time_point> sent_;
};

// Accepts connections and never reads or answers.
class SilentServer {
 public:
  SilentServer() : acceptor_(io_, {asio::ip::make_address("127.0.0.1"), 0}) {
    port_ = acceptor_.local_endpoint().port();
    asio::co_spawn(io_, accept_loop(), asio::detached);
    thread_ = std::thread([this] { io_.run(); });
  }
  ~SilentServer() {
    asio::post(io_, [this] { io_.stop(); });
    thread_.join();
  }
  std::uint16_t port() const { return port_; }
  int accepted() const { return accepted_; }

 private:
  awaitable<void> accept_loop() {
    for (;;) {
      error_code ec;
      tcp::socket s = co_await acceptor_.async_accept(asio::redirect_error(use_awaitable, ec));
      if (ec) co_return;
      ++accepted_;
      held_.push_back(std::move(s));
    }
  }

  asio::io_context io_;
  tcp::acceptor acceptor_;
  std::uint16_t port_ = 0;
  std::thread thread_;
  std::vector<tcp::socket> held_;
  std::atomic<int> accepted_{0};
};

}  // namespace iotc::testing
