#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "iotc/balancer/pool.hpp"
#include "iotc/common/asio.hpp"
#include "iotc/common/event_log.hpp"
#include "iotc/http/parser.hpp"

namespace iotc::balancer {

struct RouteRule {
  std::string prefix;
  BackendPool* pool = nullptr;
};

// Parses "prefix=pool".
std::pair<std::string, std::string> parse_rule_spec(std::string_view text);

// Throws std::invalid_argument unless some rule is the "/" catch-all.
void validate_rules(const std::vector<RouteRule>& rules);

// First rule whose prefix is a prefix of `path`, or nullptr.
const RouteRule* match_route(const std::vector<RouteRule>& rules, std::string_view path);

struct HttpProxyOptions {
  std::chrono::milliseconds connect_timeout{2000};
  std::chrono::milliseconds idle_timeout{30000};
  std::chrono::milliseconds upstream_timeout{10000};
  std::string stats_path = "/balancer/stats";
  http::ParserLimits limits;
};

// Reverse proxy. Each request is routed and balanced independently; upstream
// connections are kept alive per client connection and per backend.
class HttpProxy {
 public:
  struct Stats {
    std::uint64_t accepted = 0;
    std::uint64_t active = 0;
    std::uint64_t requests = 0;
    std::uint64_t forwarded = 0;
    std::uint64_t bad_requests = 0;
    std::uint64_t no_backend = 0;    // 503
    std::uint64_t bad_gateway = 0;   // 502
    std::uint64_t stats_requests = 0;
  };

  HttpProxy(asio::io_context& io, tcp::endpoint listen, std::vector<RouteRule> rules,
            HttpProxyOptions opts = {}, EventLog* log = nullptr);
  ~HttpProxy();

  // Served at opts.stats_path. Defaults to stats_json().
  void set_stats_source(std::function<nlohmann::json()> fn) { stats_source_ = std::move(fn); }

  void start();
  void stop();
  tcp::endpoint local_endpoint() const { return acceptor_.local_endpoint(); }
  const Stats& stats() const { return stats_; }
  nlohmann::json stats_json() const;

 private:
  struct Conn;
  struct Upstream;
  awaitable<void> accept_loop();
  awaitable<void> serve(std::shared_ptr<Conn> c);
  awaitable<void> watchdog(std::shared_ptr<Conn> c);
  awaitable<http::HttpResponse> forward(Conn& c, const http::HttpRequest& req);
  awaitable<std::optional<http::HttpResponse>> exchange(Upstream& up, const http::HttpRequest& req,
                                                        std::string_view wire);

  asio::io_context& io_;
  tcp::endpoint listen_;
  std::vector<RouteRule> rules_;
  HttpProxyOptions opts_;
  EventLog* log_;
  std::function<nlohmann::json()> stats_source_;
  tcp::acceptor acceptor_;
  std::unordered_map<std::uint64_t, std::weak_ptr<Conn>> conns_;
  std::uint64_t next_id_ = 1;
  bool stopping_ = false;
  Stats stats_;
};

}  // namespace iotc::balancer
