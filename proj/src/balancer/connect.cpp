#include "iotc/balancer/connect.hpp"

namespace iotc::balancer {

Deadline::Deadline(tcp::socket& socket, std::chrono::milliseconds timeout)
    : state_(std::make_shared<State>(State{&socket})), timer_(socket.get_executor(), timeout) {
  timer_.async_wait([st = state_](error_code ec) {
    if (ec || st->done) return;
    st->expired = true;
    error_code ignored;
    st->socket->close(ignored);
  });
}

void Deadline::cancel() {
  state_->done = true;
  timer_.cancel();
}

awaitable<error_code> connect_with_timeout(tcp::socket& socket, const HostPort& target,
                                           std::chrono::milliseconds timeout) {
  error_code ec;
  auto addr = asio::ip::make_address(target.host, ec);
  std::vector<tcp::endpoint> endpoints;
  if (!ec) {
    endpoints.emplace_back(addr, target.port);
  } else {
    tcp::resolver resolver(socket.get_executor());
    auto results = co_await resolver.async_resolve(target.host, std::to_string(target.port),
                                                   asio::redirect_error(use_awaitable, ec));
    if (ec) co_return ec;
    for (const auto& r : results) endpoints.push_back(r.endpoint());
  }
  Deadline deadline(socket, timeout);
  co_await asio::async_connect(socket, endpoints, asio::redirect_error(use_awaitable, ec));
  deadline.cancel();
  if (deadline.expired()) ec = asio::error::timed_out;
  if (!ec) socket.set_option(tcp::no_delay(true), ec);
  co_return ec;
}

}  // namespace iotc::balancer
