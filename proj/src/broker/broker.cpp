#include "iotc/broker/broker.hpp"

#include <array>

#include "iotc/common/outbox.hpp"
#include "iotc/mqtt/codec.hpp"

namespace iotc::broker {

using mqtt::Packet;
using mqtt::PacketType;

struct Broker::Conn {
  Conn(tcp::socket s, mqtt::QosPolicy policy)
      : socket(std::move(s)), outbox(socket), timer(socket.get_executor()), qos(policy) {}
  tcp::socket socket;
  Outbox outbox;
  asio::steady_timer timer;
  mqtt::QosSession qos;
  SessionId id = 0;
  std::string client_id;
  bool connected = false;
  bool closed = false;
  std::chrono::milliseconds window{0};
  Clock::time_point last_activity = Clock::now();
};

Broker::Broker(asio::io_context& io, BrokerOptions opts, MessageBus& bus, EventLog* log)
    : io_(io), opts_(std::move(opts)), bus_(bus), log_(log), acceptor_(io) {
  bus_.set_handler([this](const std::string& topic, const std::string& wire) { on_bus_message(topic, wire); });
}

Broker::~Broker() {
  stop();
  bus_.set_handler(nullptr);
}

void Broker::start() {
  try {
    acceptor_.open(opts_.listen.protocol());
    acceptor_.set_option(tcp::acceptor::reuse_address(true));
    acceptor_.bind(opts_.listen);
    acceptor_.listen(asio::socket_base::max_listen_connections);
  } catch (const boost::system::system_error& e) {
    throw std::runtime_error("cannot listen on port " + std::to_string(opts_.listen.port()) + ": " +
                             e.code().message());
  }
  bus_.start();
  asio::co_spawn(io_, accept_loop(), asio::detached);
}

void Broker::stop() {
  if (stopping_) return;
  stopping_ = true;
  error_code ignored;
  acceptor_.close(ignored);
  auto conns = conns_;
  for (auto& [id, c] : conns) close(c, "shutdown");
  bus_.stop();
}

void Broker::emit(std::string_view event, nlohmann::json fields) {
  if (!log_) return;
  fields["instance"] = opts_.instance;
  log_->emit(event, std::move(fields));
}

awaitable<void> Broker::accept_loop() {
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
    auto c = std::make_shared<Conn>(std::move(socket), opts_.qos);
    c->id = next_id_++;
    c->window = std::chrono::duration_cast<std::chrono::milliseconds>(opts_.keepalive_default) * 3 / 2;
    conns_.emplace(c->id, c);
    ++stats_.accepted;
    asio::co_spawn(io_, writer(c), asio::detached);
    asio::co_spawn(io_, serve(c), asio::detached);
    asio::co_spawn(io_, ticker(c), asio::detached);
  }
}

awaitable<void> Broker::writer(ConnPtr c) {
  co_await c->outbox.run();
  // Drained after a graceful close, or the socket failed.
  error_code ignored;
  c->socket.shutdown(tcp::socket::shutdown_both, ignored);
  c->socket.close(ignored);
  if (!c->closed) close(c, "write_error");
}

awaitable<void> Broker::serve(ConnPtr c) {
  std::vector<std::uint8_t> buf;
  std::size_t pos = 0;
  std::array<std::uint8_t, 16 * 1024> chunk;
  error_code ec;
  while (!c->closed) {
    std::size_t n = co_await c->socket.async_read_some(asio::buffer(chunk), asio::redirect_error(use_awaitable, ec));
    if (ec) break;
    if (pos > 0 && pos == buf.size()) {
      buf.clear();
      pos = 0;
    } else if (pos > 64 * 1024) {
      buf.erase(buf.begin(), buf.begin() + static_cast<long>(pos));
      pos = 0;
    }
    buf.insert(buf.end(), chunk.begin(), chunk.begin() + static_cast<long>(n));
    c->last_activity = Clock::now();
    try {
      while (!c->closed) {
        auto d = mqtt::decode_packet(std::span(buf.data() + pos, buf.size() - pos));
        if (!d) break;
        pos += d->consumed;
        handle(c, std::move(d->packet));
      }
    } catch (const mqtt::ProtocolError& e) {
      ++stats_.protocol_errors;
      close(c, std::string("protocol_error: ") + e.what());
    }
  }
  if (!c->closed) close(c, ec == asio::error::eof ? "eof" : "connection_lost");
}

awaitable<void> Broker::ticker(ConnPtr c) {
  error_code ec;
  while (!c->closed) {
    auto now = Clock::now();
    auto deadline = c->last_activity + c->window;
    c->timer.expires_at(std::min(deadline, now + opts_.tick));
    co_await c->timer.async_wait(asio::redirect_error(use_awaitable, ec));
    if (c->closed) break;
    now = Clock::now();
    if (now >= c->last_activity + c->window) {
      ++stats_.keepalive_timeouts;
      close(c, "keepalive_timeout");
      break;
    }
    for (auto id : c->qos.due_retries(now)) {
      auto step = c->qos.step(mqtt::AckTimeout{id}, now);
      if (step.teardown) {
        ++stats_.retry_teardowns;
        close(c, "retry_exhausted");
        break;
      }
      apply(c, step);
    }
  }
}

void Broker::send(const ConnPtr& c, const Packet& p) {
  if (c->closed) return;
  c->outbox.push(mqtt::encode_packet(p));
}

void Broker::apply(const ConnPtr& c, const mqtt::QosStep& step) {
  for (const auto& p : step.actions) send(c, p);
}

void Broker::close(const ConnPtr& c, std::string_view reason, bool graceful) {
  if (c->closed) return;
  c->closed = true;
  for (const auto& topic : table_.remove_session(c->id)) bus_.unsubscribe(topic);
  if (c->connected) {
    auto it = by_client_.find(c->client_id);
    if (it != by_client_.end() && it->second == c->id) by_client_.erase(it);
    ++stats_.disconnects;
    emit("disconnect", {{"client", c->client_id}, {"reason", reason}});
  }
  conns_.erase(c->id);
  c->outbox.close();
  c->timer.cancel();
  if (!graceful) {
    error_code ignored;
    c->socket.close(ignored);
  }
}

void Broker::handle(const ConnPtr& c, Packet p) {
  if (!c->connected) {
    if (p.type != PacketType::Connect) {
      ++stats_.protocol_errors;
      close(c, "first packet was not CONNECT");
      return;
    }
    on_connect(c, p);
    return;
  }
  switch (p.type) {
    case PacketType::Connect:
      ++stats_.protocol_errors;
      close(c, "second CONNECT");
      return;
    case PacketType::Publish: {
      ++stats_.publishes_received;
      auto step = c->qos.step(mqtt::Received{p});
      apply(c, step);
      for (const auto& d : step.deliveries) {
        if (bus_.publish(*d.topic, encode_bus_message(d.qos, d.payload))) {
          ++stats_.bus_published;
        } else {
          ++stats_.bus_dropped;
        }
        emit("publish", {{"client", c->client_id}, {"topic", *d.topic}, {"qos", d.qos},
                         {"bytes", d.payload.size()}});
      }
      return;
    }
    case PacketType::PubAck:
    case PacketType::PubRec:
    case PacketType::PubRel:
    case PacketType::PubComp:
      apply(c, c->qos.step(mqtt::Received{p}));
      return;
    case PacketType::Subscribe:
      on_subscribe(c, p);
      return;
    case PacketType::Unsubscribe:
      on_unsubscribe(c, p);
      return;
    case PacketType::PingReq:
      send(c, Packet::simple(PacketType::PingResp));
      return;
    case PacketType::Disconnect:
      close(c, "disconnect", true);
      return;
    default:
      ++stats_.protocol_errors;
      close(c, std::string("unexpected ") + std::string(mqtt::to_string(p.type)));
      return;
  }
}

void Broker::on_connect(const ConnPtr& c, const Packet& p) {
  if (p.connect.protocol_level != mqtt::kProtocolLevel311) {
    ++stats_.refused_protocol;
    send(c, Packet::connack(mqtt::kConnRefusedProtocolVersion));
    close(c, "unsupported protocol level", true);
    return;
  }
  std::string id = p.connect.client_id;
  if (id.empty()) id = "auto-" + std::to_string(opts_.instance) + "-" + std::to_string(++auto_ids_);
  if (auto it = by_client_.find(id); it != by_client_.end()) {
    auto old = conns_.find(it->second);
    if (old != conns_.end()) {
      ++stats_.displaced;
      ConnPtr victim = old->second;
      close(victim, "displaced");
    }
  }
  c->client_id = id;
  c->connected = true;
  by_client_[id] = c->id;
  auto ka = p.connect.keepalive > 0 ? std::chrono::seconds(p.connect.keepalive) : opts_.keepalive_default;
  c->window = std::chrono::duration_cast<std::chrono::milliseconds>(ka) * 3 / 2;
  c->timer.cancel();  // re-arm against the negotiated window
  ++stats_.connects;
  send(c, Packet::connack(mqtt::kConnAccepted));
  emit("connect", {{"client", id}, {"keepalive", p.connect.keepalive}});
}

void Broker::on_subscribe(const ConnPtr& c, const Packet& p) {
  std::vector<std::uint8_t> codes;
  for (const auto& t : p.topics) {
    std::uint8_t granted = std::min<std::uint8_t>(t.qos, 2);
    if (table_.add(t.topic, c->id, granted)) bus_.subscribe(t.topic);
    codes.push_back(granted);
    ++stats_.subscribes;
    emit("subscribe", {{"client", c->client_id}, {"topic", t.topic}, {"qos", granted}});
  }
  send(c, Packet::suback(*p.packet_id, std::move(codes)));
}

void Broker::on_unsubscribe(const ConnPtr& c, const Packet& p) {
  for (const auto& t : p.topics) {
    if (table_.remove(t.topic, c->id)) bus_.unsubscribe(t.topic);
    ++stats_.unsubscribes;
    emit("unsubscribe", {{"client", c->client_id}, {"topic", t.topic}});
  }
  send(c, Packet::ack(PacketType::UnsubAck, *p.packet_id));
}

void Broker::on_bus_message(const std::string& topic, const std::string& wire) {
  std::uint8_t qos = 0;
  std::string payload;
  if (!decode_bus_message(wire, qos, payload)) return;
  ++stats_.bus_received;
  for (const auto& [sid, max_qos] : table_.subscribers(topic)) {
    auto it = conns_.find(sid);
    if (it == conns_.end()) continue;
    const ConnPtr& c = it->second;
    if (c->outbox.queued_bytes() > opts_.max_backlog) {
      ++stats_.delivery_dropped;
      continue;
    }
    std::uint8_t effective = std::min(qos, max_qos);
    apply(c, c->qos.step(mqtt::OutboundPublish{topic, payload, effective}));
    ++stats_.deliveries;
    emit("deliver", {{"client", c->client_id}, {"topic", topic}, {"qos", effective}});
  }
}

nlohmann::json Broker::stats_json() const {
  return {{"instance", opts_.instance},
          {"sessions", by_client_.size()},
          {"connections", conns_.size()},
          {"topics", table_.topic_count()},
          {"subscriptions", table_.subscription_count()},
          {"bus_connected", bus_.connected()},
          {"accepted", stats_.accepted},
          {"connects", stats_.connects},
          {"displaced", stats_.displaced},
          {"refused_protocol", stats_.refused_protocol},
          {"protocol_errors", stats_.protocol_errors},
          {"keepalive_timeouts", stats_.keepalive_timeouts},
          {"retry_teardowns", stats_.retry_teardowns},
          {"disconnects", stats_.disconnects},
          {"publishes_received", stats_.publishes_received},
          {"bus_published", stats_.bus_published},
          {"bus_dropped", stats_.bus_dropped},
          {"bus_received", stats_.bus_received},
          {"deliveries", stats_.deliveries},
          {"delivery_dropped", stats_.delivery_dropped},
          {"subscribes", stats_.subscribes},
          {"unsubscribes", stats_.unsubscribes}};
}

}  // namespace iotc::broker
