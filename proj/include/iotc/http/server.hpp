#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <unordered_map>

#include "iotc/common/asio.hpp"
#include "iotc/http/parser.hpp"
#include "iotc/http/service.hpp"

namespace iotc::http {

struct ServerOptions {
  std::chrono::milliseconds idle_timeout{30000};
  ServiceOptions service;
  ParserLimits limits;
};

// Keep-alive HTTP/1.1 server. Requests on one connection are handled one at a
// time, in order, so pipelined requests are answered in sequence. Runs on a
// single-threaded io_context.
class HttpServer {
 public:
  struct Stats {
    std::uint64_t accepted = 0;
    std::uint64_t active = 0;
    std::uint64_t requests = 0;
    std::uint64_t parse_errors = 0;
    std::uint64_t idle_closed = 0;
  };

  HttpServer(asio::io_context& io, tcp::endpoint listen, ResourceStore& store, ServerOptions opts = {});
  ~HttpServer();

  void start();  // throws on bind failure
  void stop();
  tcp::endpoint local_endpoint() const { return acceptor_.local_endpoint(); }
  const Stats& stats() const { return stats_; }

 private:
  struct Conn;
  awaitable<void> accept_loop();
  awaitable<void> serve(std::shared_ptr<Conn> c);
  awaitable<void> watchdog(std::shared_ptr<Conn> c);

  asio::io_context& io_;
  tcp::endpoint listen_;
  ResourceStore& store_;
  ServerOptions opts_;
  tcp::acceptor acceptor_;
  std::unordered_map<std::uint64_t, std::weak_ptr<Conn>> conns_;
  std::uint64_t next_id_ = 1;
  bool stopping_ = false;
  Stats stats_;
};

}  // namespace iotc::http
