#include "iotc/balancer/stats.hpp"

#include <array>

#include "iotc/balancer/connect.hpp"
#include "iotc/http/message.hpp"

namespace iotc::balancer {

nlohmann::json balancer_stats(std::string_view mode, const std::vector<const BackendPool*>& pools,
                              const nlohmann::json& proxy) {
  nlohmann::json out{{"mode", mode}, {"pools", nlohmann::json::object()}, {"proxy", proxy}};
  std::int64_t active = 0;
  std::uint64_t selected = 0;
  int healthy = 0, total = 0;
  for (const BackendPool* p : pools) {
    out["pools"][p->name()] = p->to_json();
    for (const Backend& b : p->snapshot()) {
      active += b.active;
      selected += b.selected;
      healthy += b.healthy ? 1 : 0;
      ++total;
    }
  }
  out["totals"] = {{"active", active}, {"selected", selected}, {"backends", total}, {"healthy", healthy}};
  return out;
}

AdminServer::AdminServer(asio::io_context& io, tcp::endpoint listen, std::function<nlohmann::json()> source)
    : io_(io), listen_(listen), source_(std::move(source)), acceptor_(io) {}

AdminServer::~AdminServer() { stop(); }

void AdminServer::start() {
  acceptor_.open(listen_.protocol());
  acceptor_.set_option(tcp::acceptor::reuse_address(true));
  acceptor_.bind(listen_);
  acceptor_.listen();
  asio::co_spawn(io_, accept_loop(), asio::detached);
}

void AdminServer::stop() {
  stopping_ = true;
  error_code ignored;
  acceptor_.close(ignored);
}

awaitable<void> AdminServer::accept_loop() {
  while (!stopping_) {
    error_code ec;
    tcp::socket s = co_await acceptor_.async_accept(asio::redirect_error(use_awaitable, ec));
    if (ec) {
      if (stopping_) co_return;
      continue;
    }
    asio::co_spawn(io_, answer(std::move(s)), asio::detached);
  }
}

awaitable<void> AdminServer::answer(tcp::socket socket) {
  Deadline deadline(socket, std::chrono::milliseconds(2000));
  std::string head;
  std::array<char, 1024> buf;
  error_code ec;
  // Read until the end of a request head, or a bare newline-terminated line.
  while (head.find("\r\n\r\n") == std::string::npos && head.find('\n') == std::string::npos) {
    std::size_t n = co_await socket.async_read_some(asio::buffer(buf), asio::redirect_error(use_awaitable, ec));
    if (ec) break;
    head.append(buf.data(), n);
    if (head.size() > 16 * 1024) break;
  }
  if (head.rfind("GET ", 0) == 0 || head.rfind("HEAD ", 0) == 0) {
    while (!ec && head.find("\r\n\r\n") == std::string::npos && head.size() <= 16 * 1024) {
      std::size_t n = co_await socket.async_read_some(asio::buffer(buf), asio::redirect_error(use_awaitable, ec));
      if (!ec) head.append(buf.data(), n);
    }
  }
  std::string body = source_().dump() + "\n";
  std::string out;
  if (head.rfind("GET ", 0) == 0 || head.rfind("HEAD ", 0) == 0) {
    http::HttpResponse r = http::make_response(200, body, "application/json");
    r.close = true;
    out = r.serialize();
  } else {
    out = body;
  }
  co_await asio::async_write(socket, asio::buffer(out), asio::redirect_error(use_awaitable, ec));
  deadline.cancel();
  socket.shutdown(tcp::socket::shutdown_both, ec);
  socket.close(ec);
}

}  // namespace iotc::balancer
