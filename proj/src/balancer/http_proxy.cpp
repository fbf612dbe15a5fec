#include "iotc/balancer/http_proxy.hpp"

#include <array>
#include <map>

#include "iotc/balancer/connect.hpp"

namespace iotc::balancer {

using http::HttpRequest;
using http::HttpResponse;

std::pair<std::string, std::string> parse_rule_spec(std::string_view text) {
  auto eq = text.find('=');
  if (eq == std::string_view::npos || eq == 0 || eq + 1 == text.size()) {
    throw std::invalid_argument("rule must look like <prefix>=<pool>: " + std::string(text));
  }
  std::string prefix(text.substr(0, eq));
  if (prefix.front() != '/') throw std::invalid_argument("rule prefix must start with '/': " + prefix);
  return {prefix, std::string(text.substr(eq + 1))};
}

void validate_rules(const std::vector<RouteRule>& rules) {
  bool catch_all = false;
  for (const auto& r : rules) {
    if (!r.pool) throw std::invalid_argument("rule " + r.prefix + " has no pool");
    if (r.prefix == "/") catch_all = true;
  }
  if (!catch_all) throw std::invalid_argument("a catch-all \"/\" rule is required");
}

const RouteRule* match_route(const std::vector<RouteRule>& rules, std::string_view path) {
  for (const auto& r : rules) {
    if (path.substr(0, r.prefix.size()) == r.prefix) return &r;
  }
  return nullptr;
}

struct HttpProxy::Upstream {
  explicit Upstream(const tcp::socket::executor_type& ex) : socket(ex) {}
  tcp::socket socket;
  http::ResponseParser parser;
};

struct HttpProxy::Conn {
  explicit Conn(tcp::socket s) : socket(std::move(s)), timer(socket.get_executor()) {}
  void close() {
    error_code ignored;
    socket.shutdown(tcp::socket::shutdown_both, ignored);
    socket.close(ignored);
    timer.cancel();
    for (auto& [pool_and_index, up] : upstreams) up->socket.close(ignored);
  }
  tcp::socket socket;
  asio::steady_timer timer;
  Clock::time_point deadline = Clock::time_point::max();
  std::uint64_t id = 0;
  std::map<std::pair<const BackendPool*, std::size_t>, std::unique_ptr<Upstream>> upstreams;
};

HttpProxy::HttpProxy(asio::io_context& io, tcp::endpoint listen, std::vector<RouteRule> rules,
                     HttpProxyOptions opts, EventLog* log)
    : io_(io), listen_(listen), rules_(std::move(rules)), opts_(std::move(opts)), log_(log), acceptor_(io) {
  validate_rules(rules_);
}

HttpProxy::~HttpProxy() { stop(); }

void HttpProxy::start() {
  acceptor_.open(listen_.protocol());
  acceptor_.set_option(tcp::acceptor::reuse_address(true));
  acceptor_.bind(listen_);
  acceptor_.listen(asio::socket_base::max_listen_connections);
  asio::co_spawn(io_, accept_loop(), asio::detached);
}

void HttpProxy::stop() {
  if (stopping_) return;
  stopping_ = true;
  error_code ignored;
  acceptor_.close(ignored);
  for (auto& [id, weak] : conns_) {
    if (auto c = weak.lock()) c->close();
  }
}

awaitable<void> HttpProxy::accept_loop() {
  while (!stopping_) {
    error_code ec;
    tcp::socket socket = co_await acceptor_.async_accept(asio::redirect_error(use_awaitable, ec));
    if (ec) {
      if (stopping_) co_return;
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

awaitable<void> HttpProxy::watchdog(std::shared_ptr<Conn> c) {
  error_code ec;
  while (c->socket.is_open()) {
    c->timer.expires_at(c->deadline);
    co_await c->timer.async_wait(asio::redirect_error(use_awaitable, ec));
    if (!c->socket.is_open()) break;
    if (Clock::now() >= c->deadline) {
      c->close();
      break;
    }
  }
}

awaitable<void> HttpProxy::serve(std::shared_ptr<Conn> c) {
  http::RequestParser parser(opts_.limits);
  std::array<char, 16 * 1024> buf;
  bool keep_open = true;
  try {
    while (keep_open) {
      for (;;) {
        std::optional<HttpRequest> req;
        std::string out;
        try {
          req = parser.next();
        } catch (const http::ParseError& e) {
          ++stats_.bad_requests;
          HttpResponse r = http::make_response(e.status(), std::string(e.what()) + "\n");
          r.close = true;
          out = r.serialize();
          keep_open = false;
        }
        if (req) {
          ++stats_.requests;
          // Upstream work can take a while; keep the watchdog away meanwhile.
          c->deadline = Clock::time_point::max();
          HttpResponse r;
          if (req->path == opts_.stats_path) {
            ++stats_.stats_requests;
            nlohmann::json j = stats_source_ ? stats_source_() : stats_json();
            r = http::make_response(200, j.dump() + "\n", "application/json");
          } else {
            r = co_await forward(*c, *req);
          }
          if (!req->keep_alive()) {
            r.close = true;
            keep_open = false;
          }
          out = r.serialize();
          c->deadline = Clock::now() + opts_.idle_timeout;
        }
        if (!out.empty()) co_await asio::async_write(c->socket, asio::buffer(out), use_awaitable);
        if (!req || !keep_open) break;
      }
      if (!keep_open) break;
      std::size_t n = co_await c->socket.async_read_some(asio::buffer(buf), use_awaitable);
      c->deadline = Clock::now() + opts_.idle_timeout;
      parser.feed(buf.data(), n);
    }
  } catch (const std::exception&) {
  }
  c->close();
  conns_.erase(c->id);
  --stats_.active;
}

awaitable<HttpResponse> HttpProxy::forward(Conn& c, const HttpRequest& req) {
  const RouteRule* rule = match_route(rules_, req.path);
  if (!rule) co_return http::make_response(404, "no route\n");
  BackendPool& pool = *rule->pool;
  std::size_t index;
  try {
    index = pool.acquire(Policy::WeightedRoundRobin);
  } catch (const NoBackendError&) {
    ++stats_.no_backend;
    co_return http::make_response(503, "no healthy backend\n");
  }
  struct Release {
    BackendPool& pool;
    std::size_t index;
    ~Release() { pool.release(index); }
  } release{pool, index};

  std::string wire = req.serialize();
  auto key = std::make_pair(static_cast<const BackendPool*>(&pool), index);
  // A kept-alive upstream may have been closed by the backend in the
  // meantime; such a failure gets one fresh connection.
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto& slot = c.upstreams[key];
    bool reused = slot && slot->socket.is_open();
    if (!reused) {
      slot = std::make_unique<Upstream>(c.socket.get_executor());
      Backend b = pool.snapshot(index);
      error_code ec = co_await connect_with_timeout(slot->socket, b.address, opts_.connect_timeout);
      if (ec) {
        pool.note_connect_failure(index);
        c.upstreams.erase(key);
        ++stats_.bad_gateway;
        co_return http::make_response(502, "backend unreachable\n");
      }
    }
    Upstream& up = *c.upstreams[key];
    std::optional<HttpResponse> resp = co_await exchange(up, req, wire);
    if (resp) {
      bool backend_close = resp->close;
      if (auto conn = resp->header("Connection"); conn && http::iequals(*conn, "close")) backend_close = true;
      if (backend_close) c.upstreams.erase(key);
      resp->close = false;
      ++stats_.forwarded;
      co_return std::move(*resp);
    }
    c.upstreams.erase(key);
    if (!reused) break;
  }
  ++stats_.bad_gateway;
  co_return http::make_response(502, "bad response from backend\n");
}

awaitable<std::optional<HttpResponse>> HttpProxy::exchange(Upstream& up, const HttpRequest& req,
                                                           std::string_view wire) {
  Deadline deadline(up.socket, opts_.upstream_timeout);
  error_code ec;
  co_await asio::async_write(up.socket, asio::buffer(wire), asio::redirect_error(use_awaitable, ec));
  if (ec) co_return std::nullopt;
  bool head = req.method == "HEAD";
  std::array<char, 16 * 1024> buf;
  try {
    for (;;) {
      if (auto resp = up.parser.next(head)) co_return resp;
      std::size_t n = co_await up.socket.async_read_some(asio::buffer(buf), asio::redirect_error(use_awaitable, ec));
      if (ec) {
        if (ec == asio::error::eof) {
          if (auto resp = up.parser.finish()) {
            resp->close = true;
            co_return resp;
          }
        }
        co_return std::nullopt;
      }
      up.parser.feed(buf.data(), n);
    }
  } catch (const std::exception&) {
  }
  co_return std::nullopt;
}

nlohmann::json HttpProxy::stats_json() const {
  return {{"accepted", stats_.accepted},       {"active", stats_.active},
          {"requests", stats_.requests},       {"forwarded", stats_.forwarded},
          {"bad_requests", stats_.bad_requests}, {"no_backend", stats_.no_backend},
          {"bad_gateway", stats_.bad_gateway}, {"stats_requests", stats_.stats_requests}};
}

}  // namespace iotc::balancer
