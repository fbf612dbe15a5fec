#include "iotc/http/server.hpp"

#include <array>

namespace iotc::http {

struct HttpServer::Conn {
  explicit Conn(tcp::socket s) : socket(std::move(s)), timer(socket.get_executor()) {}
  void close() {
    error_code ignored;
    socket.shutdown(tcp::socket::shutdown_both, ignored);
    socket.close(ignored);
    timer.cancel();
  }
  tcp::socket socket;
  asio::steady_timer timer;
  Clock::time_point deadline = Clock::time_point::max();
  std::uint64_t id = 0;
};

HttpServer::HttpServer(asio::io_context& io, tcp::endpoint listen, ResourceStore& store, ServerOptions opts)
    : io_(io), listen_(listen), store_(store), opts_(std::move(opts)), acceptor_(io) {}

HttpServer::~HttpServer() { stop(); }

void HttpServer::start() {
  acceptor_.open(listen_.protocol());
  acceptor_.set_option(tcp::acceptor::reuse_address(true));
  acceptor_.bind(listen_);
  acceptor_.listen(asio::socket_base::max_listen_connections);
  asio::co_spawn(io_, accept_loop(), asio::detached);
}

void HttpServer::stop() {
  if (stopping_) return;
  stopping_ = true;
  error_code ignored;
  acceptor_.close(ignored);
  for (auto& [id, weak] : conns_) {
    if (auto c = weak.lock()) c->close();
  }
}

awaitable<void> HttpServer::accept_loop() {
  while (!stopping_) {
    error_code ec;
    tcp::socket socket = co_await acceptor_.async_accept(asio::redirect_error(use_awaitable, ec));
    if (ec) {
      if (stopping_) co_return;
      // Out of descriptors or similar: back off briefly instead of spinning.
      asio::steady_timer t(io_, std::chrono::milliseconds(10));
      co_await t.async_wait(asio::redirect_error(use_awaitable, ec));
      continue;
    }
    socket.set_option(tcp::no_delay(true), ec);
    auto c = std::make_shared<Conn>(std::move(socket));
    c->id = next_id_++;
    c->deadline = Clock::now() + opts_.idle_timeout;
    conns_.emplace(c->id, c);
    ++stats_.accepted;
    ++stats_.active;
    asio::co_spawn(io_, serve(c), asio::detached);
    asio::co_spawn(io_, watchdog(c), asio::detached);
  }
}

awaitable<void> HttpServer::watchdog(std::shared_ptr<Conn> c) {
  error_code ec;
  while (c->socket.is_open()) {
    c->timer.expires_at(c->deadline);
    co_await c->timer.async_wait(asio::redirect_error(use_awaitable, ec));
    if (!c->socket.is_open()) break;
    if (Clock::now() >= c->deadline) {
      ++stats_.idle_closed;
      c->close();
      break;
    }
  }
}

awaitable<void> HttpServer::serve(std::shared_ptr<Conn> c) {
  RequestParser parser(opts_.limits);
  std::array<char, 16 * 1024> buf;
  std::string out;
  bool keep_open = true;
  try {
    while (keep_open) {
      // Answer everything already buffered, in order, before reading more.
      out.clear();
      while (keep_open) {
        std::optional<HttpRequest> req;
        try {
          req = parser.next();
        } catch (const ParseError& e) {
          ++stats_.parse_errors;
          HttpResponse r = make_response(e.status(), std::string(e.what()) + "\n");
          r.close = true;
          out += r.serialize();
          keep_open = false;
          break;
        }
        if (!req) break;
        ++stats_.requests;
        HttpResponse r = handle_request(*req, store_, opts_.service);
        if (!req->keep_alive()) {
          r.close = true;
          keep_open = false;
        }
        out += r.serialize();
      }
      if (!out.empty()) co_await asio::async_write(c->socket, asio::buffer(out), use_awaitable);
      if (!keep_open) break;
      std::size_t n = co_await c->socket.async_read_some(asio::buffer(buf), use_awaitable);
      // The watchdog re-arms lazily when it finds the deadline moved.
      c->deadline = Clock::now() + opts_.idle_timeout;
      parser.feed(buf.data(), n);
    }
  } catch (const std::exception&) {
  }
  c->close();
  conns_.erase(c->id);
  --stats_.active;
}

}  // namespace iotc::http
