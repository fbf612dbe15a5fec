#include "iotc/slotstore/node.hpp"

#include <array>

#include "iotc/common/outbox.hpp"

namespace iotc::slotstore {

namespace {

constexpr std::size_t kMaxSubscriberBacklog = 64u * 1024 * 1024;
constexpr auto kStrictAckTimeout = std::chrono::milliseconds(1000);
constexpr auto kReconnectDelay = std::chrono::milliseconds(200);

tcp::endpoint endpoint_of(const HostPort& hp) {
  return {asio::ip::make_address(hp.host), hp.port};
}

}  // namespace

struct StoreNode::Conn {
  explicit Conn(tcp::socket s) : socket(std::move(s)), outbox(socket) {}

  void send(const Frame& f) { outbox.push(encode_frame(f)); }
  void close() {
    outbox.close();
    error_code ignored;
    socket.close(ignored);
  }

  tcp::socket socket;
  Outbox outbox;
  std::uint64_t id = 0;
  std::optional<NodeId> peer;  // set after HELLO
  std::set<std::string> topics;
};

struct StoreNode::PeerLink {
  PeerLink(asio::io_context& io, NodeId node, HostPort addr)
      : id(std::move(node)), address(std::move(addr)), timer(io) {}

  NodeId id;
  HostPort address;
  std::shared_ptr<Conn> conn;  // outbound connection while up
  asio::steady_timer timer;
  bool ever_up = false;
  bool synced = false;  // standby link: catch-up done after its first ack
  bool pong_pending = false;
  int misses = 0;
  std::uint64_t nonce = 0;
};

StoreNode::StoreNode(asio::io_context& io, ClusterManifest manifest, NodeId self, EventLog* events)
    : io_(io),
      manifest_(std::move(manifest)),
      self_(std::move(self)),
      events_(events),
      log_path_(manifest_.node(self_).log),
      engine_(self_, manifest_.initial_slot_map(), log_path_),
      acceptor_(io) {
  standby_ = manifest_.standby_for(self_);
  for (const auto& n : manifest_.nodes) {
    if (n.id != self_) links_.push_back(std::make_unique<PeerLink>(io_, n.id, n.address));
  }
}

StoreNode::~StoreNode() { stop(); }

void StoreNode::start() {
  const NodeSpec& spec = manifest_.node(self_);
  tcp::endpoint ep = endpoint_of(spec.address);
  acceptor_.open(ep.protocol());
  acceptor_.set_option(tcp::acceptor::reuse_address(true));
  acceptor_.bind(ep);
  acceptor_.listen(asio::socket_base::max_listen_connections);
  asio::co_spawn(io_, accept_loop(), asio::detached);
  for (auto& link : links_) asio::co_spawn(io_, run_link(*link), asio::detached);
  if (events_) {
    events_->emit("node_started", {{"node", self_},
                                   {"address", spec.address.str()},
                                   {"recovered_records", engine_.recovered_records()},
                                   {"torn_tail", engine_.recovered_torn_tail()},
                                   {"slots", engine_.slot_map().slot_count(self_)}});
  }
}

void StoreNode::stop() {
  if (stopping_) return;
  stopping_ = true;
  error_code ignored;
  acceptor_.close(ignored);
  for (auto& link : links_) {
    link->timer.cancel();
    if (link->conn) link->conn->close();
  }
  for (auto& [id, c] : conns_) c->close();
  for (auto& [seq, t] : ack_waiters_) t->cancel();
}

awaitable<void> StoreNode::accept_loop() {
  while (!stopping_) {
    error_code ec;
    tcp::socket socket = co_await acceptor_.async_accept(asio::redirect_error(use_awaitable, ec));
    if (ec) {
      if (stopping_ || ec == asio::error::operation_aborted) co_return;
      continue;
    }
    socket.set_option(tcp::no_delay(true), ec);
    auto c = std::make_shared<Conn>(std::move(socket));
    c->id = next_conn_id_++;
    conns_.emplace(c->id, c);
    asio::co_spawn(io_, serve(c), asio::detached);
  }
}

void StoreNode::start_conn(const std::shared_ptr<Conn>& c) {
  asio::co_spawn(io_, [c]() -> awaitable<void> { co_await c->outbox.run(); }, asio::detached);
}

void StoreNode::drop_conn(const std::shared_ptr<Conn>& c) {
  for (const auto& t : c->topics) {
    auto it = topics_.find(t);
    if (it == topics_.end()) continue;
    it->second.erase(c->id);
    if (it->second.empty()) topics_.erase(it);
  }
  c->topics.clear();
  conns_.erase(c->id);
  c->close();
}

awaitable<void> StoreNode::serve(std::shared_ptr<Conn> c) {
  start_conn(c);
  FrameDecoder decoder;
  std::array<char, 64 * 1024> buf;
  try {
    for (;;) {
      std::size_t n = co_await c->socket.async_read_some(asio::buffer(buf), use_awaitable);
      decoder.feed(buf.data(), n);
      while (auto f = decoder.next()) co_await handle(c, std::move(*f));
    }
  } catch (const FrameError& e) {
    if (events_) events_->emit("protocol_error", {{"node", self_}, {"error", e.what()}});
  } catch (const std::exception&) {
  }
  drop_conn(c);
}

awaitable<void> StoreNode::handle(std::shared_ptr<Conn> c, Frame f) {
  switch (f.op) {
    case Opcode::Set:
    case Opcode::Get:
    case Opcode::Del: {
      KvCommand cmd = parse_kv_request(f);
      ++counters_.commands;
      ExecOutcome out = engine_.execute(cmd);
      if (out.reply.status == KvReply::Status::Moved) ++counters_.moved;
      if (out.appended && standby_) {
        ship(*out.appended);
        if (manifest_.replication == Replication::Strict &&
            !co_await wait_shipped(out.appended->sequence)) {
          ++counters_.strict_timeouts;
          out.reply = KvReply::failure("standby did not confirm write " +
                                       std::to_string(out.appended->sequence));
        }
      }
      c->send(kv_response(cmd.kind, out.reply));
      break;
    }
    case Opcode::Subscribe:
    case Opcode::Unsubscribe: {
      BodyReader r(f.body);
      std::string topic = r.str();
      if (f.op == Opcode::Subscribe) {
        if (c->topics.insert(topic).second) topics_[topic].insert(c->id);
      } else if (c->topics.erase(topic)) {
        auto it = topics_.find(topic);
        if (it != topics_.end()) {
          it->second.erase(c->id);
          if (it->second.empty()) topics_.erase(it);
        }
      }
      c->send({Opcode::Ok, BodyWriter().u8(0).take()});
      break;
    }
    case Opcode::Publish: {
      BodyReader r(f.body);
      std::string topic = r.str();
      std::string payload = r.str();
      c->send(published_frame(publish(topic, payload)));
      break;
    }
    case Opcode::Forward: {
      BodyReader r(f.body);
      r.str();  // origin
      std::string topic = r.str();
      std::string payload = r.str();
      ++counters_.forward_received;
      deliver_local(topic, payload);
      break;
    }
    case Opcode::LogShip: {
      LogRecord rec = parse_logship(f);
      if (engine_.apply_replicated(rec)) {
        ++counters_.replicated;
      } else {
        ++counters_.replication_gaps;
      }
      c->send(u64_frame(Opcode::LogShipAck, engine_.last_sequence()));
      break;
    }
    case Opcode::Hello: {
      BodyReader r(f.body);
      c->peer = r.str();
      if (manifest_.node(self_).standby_of == c->peer) {
        c->send(u64_frame(Opcode::LogShipAck, engine_.last_sequence()));
      }
      break;
    }
    case Opcode::Ping: {
      f.op = Opcode::Pong;
      c->send(f);
      break;
    }
    case Opcode::Slots:
      c->send(string_frame(Opcode::Json, slots_json().dump()));
      break;
    case Opcode::Stats:
      c->send(string_frame(Opcode::Json, stats().dump()));
      break;
    case Opcode::Failover: {
      BodyReader r(f.body);
      NodeId target = r.str();
      std::uint32_t moved = fail_over(target);
      c->send(string_frame(Opcode::Json, nlohmann::json{{"node", target}, {"moved_slots", moved}}.dump()));
      break;
    }
    default:
      c->send(string_frame(Opcode::Error, "unexpected opcode " + std::string(to_string(f.op))));
      break;
  }
}

std::uint32_t StoreNode::deliver_local(const std::string& topic, const std::string& payload) {
  auto it = topics_.find(topic);
  if (it == topics_.end()) return 0;
  auto bytes = encode_frame(message_frame(Opcode::Message, topic, payload));
  std::uint32_t n = 0;
  for (auto id : it->second) {
    auto c = conns_.find(id);
    if (c == conns_.end()) continue;
    if (c->second->outbox.closed() || c->second->outbox.queued_bytes() > kMaxSubscriberBacklog) {
      ++counters_.delivery_dropped;
      continue;
    }
    c->second->outbox.push(bytes);
    ++n;
  }
  counters_.delivered += n;
  return n;
}

PublishedCounts StoreNode::publish(const std::string& topic, const std::string& payload) {
  ++counters_.published;
  PublishedCounts out;
  out.local = deliver_local(topic, payload);
  auto bytes = encode_frame(forward_frame(self_, topic, payload));
  for (auto& link : links_) {
    if (link->conn && !link->conn->outbox.closed()) {
      link->conn->outbox.push(bytes);
      ++out.forwarded;
    } else {
      ++out.dropped;
    }
  }
  counters_.forwarded += out.forwarded;
  counters_.forward_dropped += out.dropped;
  return out;
}

StoreNode::PeerLink* StoreNode::link_to(const NodeId& id) {
  for (auto& l : links_) {
    if (l->id == id) return l.get();
  }
  return nullptr;
}

awaitable<void> StoreNode::run_link(PeerLink& link) {
  const tcp::endpoint ep = endpoint_of(link.address);
  error_code ignored;
  while (!stopping_) {
    tcp::socket socket(io_);
    error_code ec;
    co_await socket.async_connect(ep, asio::redirect_error(use_awaitable, ec));
    if (stopping_) co_return;
    if (ec) {
      note_miss(link);
      link.timer.expires_after(manifest_.ping_interval);
      co_await link.timer.async_wait(asio::redirect_error(use_awaitable, ignored));
      continue;
    }
    socket.set_option(tcp::no_delay(true), ec);
    auto c = std::make_shared<Conn>(std::move(socket));
    link.conn = c;
    link.synced = false;
    link.pong_pending = false;
    link.misses = 0;
    if (events_) events_->emit("peer_up", {{"node", self_}, {"peer", link.id}});
    link.ever_up = true;
    start_conn(c);
    c->send(string_frame(Opcode::Hello, self_));
    asio::co_spawn(io_, read_link(link, c), asio::detached);

    while (!stopping_ && link.conn == c) {
      if (link.pong_pending) note_miss(link);
      link.pong_pending = true;
      c->send(u64_frame(Opcode::Ping, ++link.nonce));
      link.timer.expires_after(manifest_.ping_interval);
      co_await link.timer.async_wait(asio::redirect_error(use_awaitable, ignored));
    }
    c->close();
    if (link.conn == c) link.conn.reset();
    if (stopping_) co_return;
    if (events_) events_->emit("peer_down", {{"node", self_}, {"peer", link.id}});
    link.timer.expires_after(kReconnectDelay);
    co_await link.timer.async_wait(asio::redirect_error(use_awaitable, ignored));
  }
}

awaitable<void> StoreNode::read_link(PeerLink& link, std::shared_ptr<Conn> c) {
  FrameDecoder decoder;
  std::array<char, 16 * 1024> buf;
  try {
    for (;;) {
      std::size_t n = co_await c->socket.async_read_some(asio::buffer(buf), use_awaitable);
      decoder.feed(buf.data(), n);
      while (auto f = decoder.next()) {
        if (f->op == Opcode::Pong) {
          link.pong_pending = false;
          link.misses = 0;
        } else if (f->op == Opcode::LogShipAck) {
          on_ship_ack(link, BodyReader(f->body).u64());
        }
      }
    }
  } catch (const std::exception&) {
  }
  if (link.conn == c) {
    link.conn.reset();
    link.timer.cancel();
  }
  c->close();
}

void StoreNode::note_miss(PeerLink& link) {
  if (!link.ever_up) return;  // never count a peer that has not come up yet
  if (++link.misses < manifest_.ping_misses || failed_.count(link.id)) return;
  if (events_) events_->emit("peer_failed", {{"node", self_}, {"peer", link.id}, {"misses", link.misses}});
  fail_over(link.id);
}

std::uint32_t StoreNode::fail_over(const NodeId& node) {
  if (node == self_) return 0;
  failed_.insert(node);
  auto standby = manifest_.standby_for(node);
  if (!standby || (*standby != self_ && failed_.count(*standby))) {
    if (events_) events_->emit("slots_unavailable", {{"node", self_}, {"failed", node}});
    return 0;
  }
  std::uint32_t moved = engine_.slot_map().reassign(node, *standby);
  if (moved > 0 && events_) {
    events_->emit("failover", {{"node", self_},
                               {"failed", node},
                               {"standby", *standby},
                               {"slots", moved},
                               {"promoted_self", *standby == self_},
                               {"last_sequence", engine_.last_sequence()}});
  }
  return moved;
}

bool StoreNode::standby_usable() const {
  return standby_ && !failed_.count(*standby_);
}

void StoreNode::ship(const LogRecord& r) {
  unacked_.push_back(r);
  PeerLink* link = link_to(*standby_);
  if (link && link->conn && link->synced) link->conn->send(logship_frame(r));
}

void StoreNode::on_ship_ack(PeerLink& link, std::uint64_t sequence) {
  if (!standby_ || link.id != *standby_) return;
  if (!link.synced) {
    // First ack on a fresh connection reports where the standby is.
    link.synced = true;
    const bool covered = unacked_.empty() ? sequence >= engine_.last_sequence()
                                          : unacked_.front().sequence <= sequence + 1;
    if (!covered && log_path_) {
      LogReadResult from_disk = read_log(*log_path_);
      for (const auto& r : from_disk.records) {
        if (r.sequence > sequence) link.conn->send(logship_frame(r));
      }
    } else {
      for (const auto& r : unacked_) {
        if (r.sequence > sequence) link.conn->send(logship_frame(r));
      }
    }
  }
  shipped_acked_ = std::max(shipped_acked_, sequence);
  while (!unacked_.empty() && unacked_.front().sequence <= shipped_acked_) unacked_.pop_front();
  for (auto it = ack_waiters_.begin(); it != ack_waiters_.end() && it->first <= shipped_acked_;) {
    it->second->cancel();
    it = ack_waiters_.erase(it);
  }
}

awaitable<bool> StoreNode::wait_shipped(std::uint64_t sequence) {
  if (shipped_acked_ >= sequence) co_return true;
  if (!standby_usable()) co_return false;
  auto timer = std::make_shared<asio::steady_timer>(io_, kStrictAckTimeout);
  auto it = ack_waiters_.emplace(sequence, timer);
  error_code ignored;
  co_await timer->async_wait(asio::redirect_error(use_awaitable, ignored));
  if (shipped_acked_ < sequence) ack_waiters_.erase(it);
  co_return shipped_acked_ >= sequence;
}

nlohmann::json StoreNode::slots_json() const {
  nlohmann::json nodes = nlohmann::json::object();
  for (const auto& n : manifest_.nodes) nodes[n.id] = n.address.str();
  return {{"map", engine_.slot_map().to_json()},
          {"nodes", nodes},
          {"failed", std::vector<NodeId>(failed_.begin(), failed_.end())}};
}

nlohmann::json StoreNode::stats() const {
  nlohmann::json peers = nlohmann::json::object();
  for (const auto& l : links_) {
    peers[l->id] = {{"up", l->conn != nullptr}, {"failed", failed_.count(l->id) > 0}, {"misses", l->misses}};
  }
  std::size_t subs = 0;
  for (const auto& [t, ids] : topics_) subs += ids.size();
  const bool standby_node = manifest_.node(self_).standby_of.has_value();
  const std::uint32_t owned = engine_.slot_map().slot_count(self_);
  return {{"node", self_},
          {"role", standby_node ? (owned > 0 ? "promoted" : "standby") : "primary"},
          {"slots", owned},
          {"keys", engine_.table().size()},
          {"last_sequence", engine_.last_sequence()},
          {"shipped_acked", shipped_acked_},
          {"unacked", unacked_.size()},
          {"connections", conns_.size()},
          {"subscriptions", subs},
          {"commands", counters_.commands},
          {"moved", counters_.moved},
          {"published", counters_.published},
          {"delivered", counters_.delivered},
          {"forwarded", counters_.forwarded},
          {"forward_received", counters_.forward_received},
          {"forward_dropped", counters_.forward_dropped},
          {"delivery_dropped", counters_.delivery_dropped},
          {"replicated", counters_.replicated},
          {"replication_gaps", counters_.replication_gaps},
          {"strict_timeouts", counters_.strict_timeouts},
          {"peers", peers}};
}

}  // namespace iotc::slotstore
