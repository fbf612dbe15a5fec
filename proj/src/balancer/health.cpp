#include "iotc/balancer/health.hpp"

#include <array>

#include "iotc/balancer/connect.hpp"
#include "iotc/http/parser.hpp"

namespace iotc::balancer {

std::int64_t wall_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

awaitable<bool> probe_backend(HostPort target, HealthOptions opts) {
  auto ex = co_await asio::this_coro::executor;
  tcp::socket socket(ex);
  auto start = Clock::now();
  error_code ec = co_await connect_with_timeout(socket, target, opts.timeout);
  if (ec) co_return false;
  if (opts.kind == ProbeKind::Tcp) {
    socket.close(ec);
    co_return true;
  }
  auto left = opts.timeout - std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start);
  if (left.count() <= 0) co_return false;
  Deadline deadline(socket, left);
  std::string req = "GET " + opts.path + " HTTP/1.1\r\nHost: " + target.str() +
                    "\r\nConnection: close\r\n\r\n";
  co_await asio::async_write(socket, asio::buffer(req), asio::redirect_error(use_awaitable, ec));
  if (ec) co_return false;
  http::ResponseParser parser;
  std::array<char, 4096> buf;
  for (;;) {
    std::optional<http::HttpResponse> resp;
    try {
      resp = parser.next();
    } catch (const std::exception&) {
      co_return false;
    }
    if (resp) co_return resp->status == 200;
    std::size_t n = co_await socket.async_read_some(asio::buffer(buf), asio::redirect_error(use_awaitable, ec));
    if (ec) {
      if (ec != asio::error::eof) co_return false;
      try {
        resp = parser.finish();
      } catch (const std::exception&) {
        co_return false;
      }
      co_return resp && resp->status == 200;
    }
    parser.feed(buf.data(), n);
  }
}

HealthChecker::HealthChecker(asio::io_context& io, std::vector<BackendPool*> pools, HealthOptions opts,
                             EventLog* log)
    : io_(io), pools_(std::move(pools)), opts_(std::move(opts)), log_(log) {}

void HealthChecker::start() {
  for (BackendPool* pool : pools_) {
    for (std::size_t i = 0; i < pool->size(); ++i) {
      timers_.push_back(std::make_unique<asio::steady_timer>(io_));
      asio::co_spawn(io_, run(pool, i, timers_.back().get()), asio::detached);
    }
  }
}

void HealthChecker::stop() {
  stopping_ = true;
  for (auto& t : timers_) t->cancel();
}

awaitable<void> HealthChecker::run(BackendPool* pool, std::size_t index, asio::steady_timer* timer) {
  while (!stopping_) {
    auto next = Clock::now() + opts_.interval;
    bool ok = co_await probe_backend(pool->snapshot(index).address, opts_);
    if (stopping_) break;
    ++probes_;
    if (pool->report_health(index, ok, wall_ms()) && log_) {
      Backend b = pool->snapshot(index);
      log_->emit("backend_health", {{"pool", pool->name()}, {"backend", b.id},
                                    {"address", b.address.str()}, {"healthy", b.healthy}});
    }
    timer->expires_at(next);
    error_code ec;
    co_await timer->async_wait(asio::redirect_error(use_awaitable, ec));
  }
}

}  // namespace iotc::balancer
