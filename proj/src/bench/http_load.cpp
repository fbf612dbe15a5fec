#include <array>
#include <memory>
#include <vector>

#include "iotc/bench/load.hpp"
#include "iotc/http/parser.hpp"
#include "iotc/http/service.hpp"
#include "run_state.hpp"

namespace iotc::bench {

namespace {

using detail::RunState;

struct HttpClient {
  HttpClient(asio::io_context& io, int index) : socket(io), index(index) {}
  tcp::socket socket;
  int index;
  bool busy = false;
  bool timed_out = false;
  Clock::time_point deadline{};
};

class HttpLoad {
 public:
  HttpLoad(const BenchConfig& cfg, tcp::endpoint ep) : cfg_(cfg), ep_(ep), state_(cfg), ticker_(io_) {
    request_ = "GET " + std::string(http::kBenchPagePath) + " HTTP/1.1\r\nHost: " + cfg.target.str() +
               "\r\nUser-Agent: iotc-bench\r\n\r\n";
  }

  MetricsReport run() {
    auto offsets = start_offsets_ms(cfg_);
    state_.begin(Clock::now());
    for (int i = 0; i < cfg_.clients; ++i) {
      clients_.push_back(std::make_unique<HttpClient>(io_, i));
      asio::co_spawn(io_, client(*clients_.back(), offsets[static_cast<std::size_t>(i)]), asio::detached);
    }
    asio::co_spawn(io_, tick(), asio::detached);
    io_.run();
    return state_.finish(Clock::now());
  }

 private:
  awaitable<void> tick() {
    int n = 0;
    for (;;) {
      ticker_.expires_after(std::chrono::milliseconds(50));
      error_code ec;
      co_await ticker_.async_wait(asio::redirect_error(use_awaitable, ec));
      auto now = Clock::now();
      if (++n % 2 == 0) state_.sample_gauge();
      if (now >= state_.end) {
        state_.stopping = true;
        for (auto& c : clients_) {
          error_code ignored;
          c->socket.close(ignored);
        }
        co_return;
      }
      for (auto& c : clients_) {
        if (c->busy && !c->timed_out && now >= c->deadline) {
          c->timed_out = true;
          error_code ignored;
          c->socket.close(ignored);
        }
      }
    }
  }

  awaitable<void> client(HttpClient& c, std::int64_t offset_ms) {
    asio::steady_timer pause(io_);
    pause.expires_at(state_.start + std::chrono::milliseconds(offset_ms));
    error_code ec;
    co_await pause.async_wait(asio::redirect_error(use_awaitable, ec));

    http::ResponseParser parser;
    std::array<char, 16384> buf;
    bool connected = false;
    while (!state_.stopping) {
      state_.issue(c.index);
      c.busy = true;
      c.timed_out = false;
      c.deadline = Clock::now() + std::chrono::seconds(cfg_.timeout_s);

      bool ok = false;
      Clock::time_point t0{};
      if (!connected) {
        error_code ignored;
        c.socket.close(ignored);
        ec = co_await detail::connect_within(c.socket, ep_, c.deadline);
        connected = !ec;
        if (connected) parser = http::ResponseParser();
        if (c.timed_out) ec = asio::error::timed_out;
      }
      if (connected && !state_.stopping && !c.timed_out) {
        t0 = Clock::now();
        co_await asio::async_write(c.socket, asio::buffer(request_), asio::redirect_error(use_awaitable, ec));
        while (!ec) {
          std::optional<http::HttpResponse> resp;
          try {
            resp = parser.next();
          } catch (const http::ParseError&) {
            ec = asio::error::invalid_argument;
            break;
          }
          if (resp) {
            ok = resp->status == 200 && resp->body.size() == http::bench_page().size();
            if (resp->close) connected = false;
            if (auto h = resp->header("Connection"); h && http::iequals(*h, "close")) connected = false;
            break;
          }
          std::size_t n = co_await c.socket.async_read_some(asio::buffer(buf),
                                                            asio::redirect_error(use_awaitable, ec));
          if (!ec) parser.feed(buf.data(), n);
        }
      }
      auto done = Clock::now();
      c.busy = false;
      if (ok) {
        state_.succeed(done, done - t0);
        continue;
      }
      connected = false;
      error_code ignored;
      c.socket.close(ignored);
      if (state_.stopping && !c.timed_out) {
        state_.cut_off();
        break;
      }
      state_.fail(done);
      ++state_.report.reconnects;
      // Back off briefly so a refusing server is not hammered in a tight loop.
      pause.expires_after(std::chrono::milliseconds(100));
      co_await pause.async_wait(asio::redirect_error(use_awaitable, ec));
    }
  }

  const BenchConfig& cfg_;
  tcp::endpoint ep_;
  asio::io_context io_{1};
  RunState state_;
  asio::steady_timer ticker_;
  std::vector<std::unique_ptr<HttpClient>> clients_;
  std::string request_;
};

}  // namespace

MetricsReport run_http_load(const BenchConfig& cfg) {
  if (cfg.mode != Mode::Http) throw ConfigError("run_http_load needs mode http");
  cfg.validate();
  auto ep = detail::probe_target(cfg.target, std::chrono::seconds(cfg.timeout_s));
  HttpLoad load(cfg, ep);
  return load.run();
}

MetricsReport run_load(const BenchConfig& cfg) {
  return cfg.mode == Mode::Http ? run_http_load(cfg) : run_mqtt_load(cfg);
}

}  // namespace iotc::bench
