#include <array>
#include <charconv>
#include <memory>
#include <vector>

#include <unistd.h>

#include "iotc/bench/load.hpp"
#include "iotc/common/outbox.hpp"
#include "iotc/mqtt/codec.hpp"
#include "iotc/mqtt/qos.hpp"
#include "run_state.hpp"

namespace iotc::bench {

namespace {

using detail::RunState;
using mqtt::Packet;
using mqtt::PacketType;

struct MqttClient {
  MqttClient(asio::io_context& io, int index)
      : socket(io), publish_timer(io), index(index), topic("bench/" + std::to_string(index)) {}

  tcp::socket socket;
  asio::steady_timer publish_timer;
  std::shared_ptr<Outbox> outbox;
  mqtt::QosSession session;
  int index;
  std::string topic;
  bool live = false;             // connected and subscribed
  Clock::time_point deadline = Clock::time_point::max();  // handshake guard

  std::uint64_t seq = 0;
  std::optional<std::uint64_t> pending;
  Clock::time_point pending_since{};

  void send(const Packet& p) {
    if (outbox) outbox->push(mqtt::encode_packet(p));
  }
  void drop() {
    live = false;
    if (outbox) outbox->close();
    error_code ignored;
    socket.close(ignored);
  }
};

// "<seq> <nanoseconds since run start>"
std::string make_payload(std::uint64_t seq, std::int64_t ns) {
  return std::to_string(seq) + " " + std::to_string(ns);
}

bool parse_payload(const std::string& p, std::uint64_t& seq, std::int64_t& ns) {
  auto sp = p.find(' ');
  if (sp == std::string::npos) return false;
  auto a = std::from_chars(p.data(), p.data() + sp, seq);
  auto b = std::from_chars(p.data() + sp + 1, p.data() + p.size(), ns);
  return a.ec == std::errc() && b.ec == std::errc() && b.ptr == p.data() + p.size();
}

class MqttLoad {
 public:
  MqttLoad(const BenchConfig& cfg, tcp::endpoint ep) : cfg_(cfg), ep_(ep), state_(cfg), ticker_(io_) {
    interval_ = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(cfg.interval_s));
    keepalive_ = static_cast<std::uint16_t>(std::min(65535.0, std::max(60.0, cfg.interval_s * 3)));
    id_prefix_ = "bench-" + std::to_string(::getpid()) + "-";
  }

  MetricsReport run() {
    auto phases = start_offsets_ms(cfg_);
    state_.begin(Clock::now());
    for (int i = 0; i < cfg_.clients; ++i) {
      clients_.push_back(std::make_unique<MqttClient>(io_, i));
      auto& c = *clients_.back();
      asio::co_spawn(io_, connection(c), asio::detached);
      asio::co_spawn(io_, publisher(c, phases[static_cast<std::size_t>(i)]), asio::detached);
    }
    asio::co_spawn(io_, tick(), asio::detached);
    io_.run();
    return state_.finish(Clock::now());
  }

 private:
  awaitable<void> tick() {
    int n = 0;
    error_code ec;
    for (;;) {
      ticker_.expires_after(std::chrono::milliseconds(50));
      co_await ticker_.async_wait(asio::redirect_error(use_awaitable, ec));
      auto now = Clock::now();
      ++n;
      if (n % 2 == 0) state_.sample_gauge();
      if (now >= state_.end) break;
      auto timeout = std::chrono::seconds(cfg_.timeout_s);
      for (auto& c : clients_) {
        if (c->pending && now - c->pending_since >= timeout) {
          c->pending.reset();
          state_.fail(now);
        }
        if (!c->live && now >= c->deadline) c->drop();
        if (c->live && n % 10 == 0) retransmit(*c, now);
      }
    }
    state_.stopping = true;
    auto now = Clock::now();
    for (auto& c : clients_) {
      if (c->pending) {
        if (now - c->pending_since >= std::chrono::seconds(cfg_.timeout_s)) {
          state_.fail(now);
        } else {
          state_.cut_off();
        }
        c->pending.reset();
      }
      c->publish_timer.cancel();
      if (c->live) {
        c->send(Packet::simple(PacketType::Disconnect));
        c->live = false;
        if (c->outbox) c->outbox->close();
      }
    }
    // Give the DISCONNECTs a moment to flush, then close whatever is left.
    ticker_.expires_after(std::chrono::milliseconds(300));
    co_await ticker_.async_wait(asio::redirect_error(use_awaitable, ec));
    for (auto& c : clients_) c->drop();
  }

  void retransmit(MqttClient& c, Clock::time_point now) {
    for (auto id : c.session.due_retries(now)) {
      auto step = c.session.step(mqtt::AckTimeout{id}, now);
      for (const auto& p : step.actions) c.send(p);
      if (step.teardown) {
        c.drop();
        return;
      }
    }
  }

  // Reads one packet, buffering surplus bytes in `buf`.
  awaitable<std::optional<Packet>> read_packet(MqttClient& c, std::vector<std::uint8_t>& buf, error_code& ec) {
    std::array<std::uint8_t, 8192> chunk;
    for (;;) {
      try {
        if (auto d = mqtt::decode_packet(buf)) {
          buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(d->consumed));
          co_return std::move(d->packet);
        }
      } catch (const mqtt::ProtocolError&) {
        ec = asio::error::invalid_argument;
        co_return std::nullopt;
      }
      std::size_t n = co_await c.socket.async_read_some(asio::buffer(chunk), asio::redirect_error(use_awaitable, ec));
      if (ec) co_return std::nullopt;
      buf.insert(buf.end(), chunk.begin(), chunk.begin() + static_cast<std::ptrdiff_t>(n));
    }
  }

  // Connects, subscribes and reads until the connection ends; reconnects
  // until the run stops.
  awaitable<void> connection(MqttClient& c) {
    asio::steady_timer backoff(io_);
    error_code ec;
    bool first = true;
    while (!state_.stopping) {
      if (!first) {
        backoff.expires_after(std::chrono::milliseconds(ec ? 1000 : 200));
        error_code ignored;
        co_await backoff.async_wait(asio::redirect_error(use_awaitable, ignored));
        if (state_.stopping) break;
        ++state_.report.reconnects;
      }
      first = false;
      c.session = mqtt::QosSession();
      c.deadline = Clock::now() + std::chrono::seconds(cfg_.timeout_s);
      error_code ignored;
      c.socket.close(ignored);
      ec = co_await detail::connect_within(c.socket, ep_, c.deadline);
      if (ec) {
        ++state_.report.client_failures;
        continue;
      }
      c.outbox = std::make_shared<Outbox>(c.socket);
      asio::co_spawn(io_, [ob = c.outbox]() -> awaitable<void> { co_await ob->run(); }, asio::detached);
      c.send(Packet::connect_packet(id_prefix_ + std::to_string(c.index), keepalive_));

      std::vector<std::uint8_t> buf;
      auto connack = co_await read_packet(c, buf, ec);
      if (!connack || connack->type != PacketType::ConnAck || connack->return_code != 0) {
        ++state_.report.client_failures;
        c.drop();
        if (!ec) ec = asio::error::connection_refused;
        continue;
      }
      c.send(Packet::subscribe(1, {{c.topic, static_cast<std::uint8_t>(cfg_.qos)}}));
      auto suback = co_await read_packet(c, buf, ec);
      if (!suback || suback->type != PacketType::SubAck || suback->return_codes.empty() ||
          suback->return_codes[0] == mqtt::kSubAckFailure) {
        ++state_.report.client_failures;
        c.drop();
        if (!ec) ec = asio::error::connection_refused;
        continue;
      }
      c.deadline = Clock::time_point::max();
      if (state_.stopping) break;
      c.live = true;

      while (c.live || c.socket.is_open()) {
        auto p = co_await read_packet(c, buf, ec);
        if (!p) break;
        handle(c, *p);
      }
      c.drop();
      ec = {};
    }
  }

  void handle(MqttClient& c, const Packet& p) {
    switch (p.type) {
      case PacketType::Publish:
      case PacketType::PubAck:
      case PacketType::PubRec:
      case PacketType::PubRel:
      case PacketType::PubComp: {
        auto now = Clock::now();
        auto step = c.session.step(mqtt::Received{p}, now);
        for (const auto& a : step.actions) c.send(a);
        for (const auto& d : step.deliveries) deliver(c, d, now);
        break;
      }
      default:
        break;
    }
  }

  void deliver(MqttClient& c, const Packet& p, Clock::time_point now) {
    if (state_.stopping) return;
    if (p.topic != c.topic) {
      ++state_.report.foreign;
      return;
    }
    std::uint64_t seq = 0;
    std::int64_t ns = 0;
    if (!parse_payload(p.payload, seq, ns) || !c.pending || *c.pending != seq) {
      ++state_.report.duplicates;
      return;
    }
    c.pending.reset();
    auto sent = state_.start + std::chrono::nanoseconds(ns);
    state_.succeed(now, now - sent);
  }

  awaitable<void> publisher(MqttClient& c, std::int64_t phase_ms) {
    auto next = state_.start + std::chrono::milliseconds(phase_ms);
    error_code ec;
    for (;;) {
      c.publish_timer.expires_at(next);
      co_await c.publish_timer.async_wait(asio::redirect_error(use_awaitable, ec));
      if (state_.stopping) co_return;
      auto now = Clock::now();
      if (now < next) continue;  // woken early
      next += interval_;
      if (now >= state_.end) continue;
      if (!c.live || c.pending) {
        ++state_.report.skipped_ticks;
        continue;
      }
      state_.issue(c.index);
      c.pending = ++c.seq;
      c.pending_since = now;
      auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(now - state_.start).count();
      auto step = c.session.step(
          mqtt::OutboundPublish{c.topic, make_payload(c.seq, ns), static_cast<std::uint8_t>(cfg_.qos)}, now);
      for (const auto& a : step.actions) c.send(a);
    }
  }

  const BenchConfig& cfg_;
  tcp::endpoint ep_;
  asio::io_context io_{1};
  RunState state_;
  asio::steady_timer ticker_;
  std::vector<std::unique_ptr<MqttClient>> clients_;
  Clock::duration interval_{};
  std::uint16_t keepalive_ = 60;
  std::string id_prefix_;
};

}  // namespace

MetricsReport run_mqtt_load(const BenchConfig& cfg) {
  if (cfg.mode != Mode::Mqtt) throw ConfigError("run_mqtt_load needs mode mqtt");
  cfg.validate();
  auto ep = detail::probe_target(cfg.target, std::chrono::seconds(cfg.timeout_s));
  MqttLoad load(cfg, ep);
  return load.run();
}

}  // namespace iotc::bench
