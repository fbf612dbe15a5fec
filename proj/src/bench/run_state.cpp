#include "run_state.hpp"

#include <memory>

namespace iotc::bench::detail {

tcp::endpoint probe_target(const HostPort& target, std::chrono::milliseconds timeout) {
  asio::io_context io;
  tcp::endpoint ep;
  try {
    tcp::resolver resolver(io);
    auto results = resolver.resolve(target.host, std::to_string(target.port));
    if (results.empty()) throw ConfigError("cannot resolve " + target.str());
    ep = *results.begin();
  } catch (const boost::system::system_error& e) {
    throw ConfigError("cannot resolve " + target.str() + ": " + e.code().message());
  }
  tcp::socket s(io);
  error_code result = asio::error::would_block;
  asio::co_spawn(
      io,
      [&]() -> awaitable<void> {
        result = co_await connect_within(s, ep, Clock::now() + timeout);
      },
      asio::detached);
  io.run();
  if (result) throw ConfigError("target " + target.str() + " unreachable: " + result.message());
  return ep;
}

awaitable<error_code> connect_within(tcp::socket& s, const tcp::endpoint& ep, Clock::time_point deadline) {
  auto ex = co_await asio::this_coro::executor;
  auto expired = std::make_shared<bool>(false);
  auto done = std::make_shared<bool>(false);
  auto timer = std::make_shared<asio::steady_timer>(ex, deadline);
  timer->async_wait([expired, done, &s](error_code ec) {
    if (ec || *done) return;
    *expired = true;
    error_code ignored;
    s.close(ignored);
  });
  error_code ec;
  if (!s.is_open()) s.open(ep.protocol(), ec);
  if (!ec) co_await s.async_connect(ep, asio::redirect_error(use_awaitable, ec));
  *done = true;
  timer->cancel();
  if (*expired) ec = asio::error::timed_out;
  if (!ec) s.set_option(tcp::no_delay(true), ec);
  co_return ec;
}

}  // namespace iotc::bench::detail
