#include "iotc/balancer/tcp_proxy.hpp"

#include "iotc/balancer/connect.hpp"

namespace iotc::balancer {

struct TcpProxy::Session {
  Session(tcp::socket c, std::size_t backend_index)
      : client(std::move(c)), backend(client.get_executor()), index(backend_index) {}
  void close() {
    error_code ignored;
    client.close(ignored);
    backend.close(ignored);
  }
  tcp::socket client;
  tcp::socket backend;
  std::size_t index;
  std::uint64_t id = 0;
  int pumps = 2;
  bool released = false;
};

TcpProxy::TcpProxy(asio::io_context& io, tcp::endpoint listen, BackendPool& pool, TcpProxyOptions opts,
                   EventLog* log)
    : io_(io), listen_(listen), pool_(pool), opts_(opts), log_(log), acceptor_(io) {}

TcpProxy::~TcpProxy() { stop(); }

void TcpProxy::start() {
  acceptor_.open(listen_.protocol());
  acceptor_.set_option(tcp::acceptor::reuse_address(true));
  acceptor_.bind(listen_);
  acceptor_.listen(asio::socket_base::max_listen_connections);
  asio::co_spawn(io_, accept_loop(), asio::detached);
}

void TcpProxy::stop() {
  if (stopping_) return;
  stopping_ = true;
  error_code ignored;
  acceptor_.close(ignored);
  for (auto& [id, weak] : sessions_) {
    if (auto s = weak.lock()) s->close();
  }
}

awaitable<void> TcpProxy::accept_loop() {
  while (!stopping_) {
    error_code ec;
    tcp::socket client = co_await acceptor_.async_accept(asio::redirect_error(use_awaitable, ec));
    if (ec) {
      if (stopping_) co_return;
      asio::steady_timer t(io_, std::chrono::milliseconds(10));
      co_await t.async_wait(asio::redirect_error(use_awaitable, ec));
      continue;
    }
    ++stats_.accepted;
    client.set_option(tcp::no_delay(true), ec);
    asio::co_spawn(io_, handle(std::move(client)), asio::detached);
  }
}

awaitable<void> TcpProxy::handle(tcp::socket client) {
  std::optional<std::size_t> failed;
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::size_t index;
    try {
      index = pool_.acquire(Policy::LeastConnections, failed);
    } catch (const NoBackendError&) {
      break;
    }
    auto s = std::make_shared<Session>(std::move(client), index);
    Backend b = pool_.snapshot(index);
    error_code ec = co_await connect_with_timeout(s->backend, b.address, opts_.connect_timeout);
    if (ec || stopping_) {
      pool_.release(index);
      pool_.note_connect_failure(index);
      ++stats_.connect_failures;
      if (log_) log_->emit("backend_connect_failed", {{"backend", b.id}, {"error", ec.message()}});
      client = std::move(s->client);
      failed = index;
      if (attempt == 0) ++stats_.retries;
      continue;
    }
    s->id = next_id_++;
    sessions_.emplace(s->id, s);
    ++stats_.active;
    asio::co_spawn(io_, pump(s, true), asio::detached);
    asio::co_spawn(io_, pump(s, false), asio::detached);
    co_return;
  }
  ++stats_.refused;
  error_code ignored;
  client.close(ignored);
}

awaitable<void> TcpProxy::pump(std::shared_ptr<Session> s, bool upstream) {
  tcp::socket& from = upstream ? s->client : s->backend;
  tcp::socket& to = upstream ? s->backend : s->client;
  std::uint64_t& counter = upstream ? stats_.bytes_up : stats_.bytes_down;
  std::vector<char> buf(opts_.buffer_size);
  error_code ec;
  for (;;) {
    std::size_t n = co_await from.async_read_some(asio::buffer(buf), asio::redirect_error(use_awaitable, ec));
    if (ec) break;
    co_await asio::async_write(to, asio::buffer(buf.data(), n), asio::redirect_error(use_awaitable, ec));
    if (ec) break;
    counter += n;
  }
  if (ec == asio::error::eof && upstream) {
    // Client half-close: pass it on and let the backend finish answering.
    error_code ignored;
    to.shutdown(tcp::socket::shutdown_send, ignored);
  } else {
    // The backend going away ends the session, after its bytes went out.
    error_code ignored;
    to.shutdown(tcp::socket::shutdown_send, ignored);
    s->close();
  }
  if (--s->pumps == 0) finish(*s);
}

void TcpProxy::finish(Session& s) {
  s.close();
  if (s.released) return;
  s.released = true;
  pool_.release(s.index);
  sessions_.erase(s.id);
  --stats_.active;
  ++stats_.completed;
}

nlohmann::json TcpProxy::stats_json() const {
  return {{"accepted", stats_.accepted},   {"active", stats_.active},
          {"completed", stats_.completed}, {"refused", stats_.refused},
          {"connect_failures", stats_.connect_failures}, {"retries", stats_.retries},
          {"bytes_up", stats_.bytes_up},   {"bytes_down", stats_.bytes_down}};
}

}  // namespace iotc::balancer
