#include "iotc/slotstore/bus_client.hpp"

#include <array>

#include "iotc/common/outbox.hpp"
#include "iotc/slotstore/protocol.hpp"

namespace iotc::slotstore {

struct BusClient::Session {
  explicit Session(tcp::socket s) : socket(std::move(s)), outbox(socket) {}
  void send(const Frame& f) { outbox.push(encode_frame(f)); }
  tcp::socket socket;
  Outbox outbox;
};

BusClient::BusClient(asio::any_io_executor ex, std::vector<HostPort> nodes, std::size_t home,
                     Handler on_message)
    : ex_(ex),
      nodes_(std::move(nodes)),
      current_(nodes_.empty() ? 0 : home % nodes_.size()),
      on_message_(std::move(on_message)),
      retry_(ex) {
  if (nodes_.empty()) throw std::invalid_argument("bus client needs at least one node");
}

BusClient::~BusClient() = default;

void BusClient::start() {
  asio::co_spawn(ex_, [self = shared_from_this()]() { return self->run(); }, asio::detached);
}

void BusClient::stop() {
  stopping_ = true;
  retry_.cancel();
  if (session_) {
    session_->outbox.close();
    error_code ignored;
    session_->socket.close(ignored);
  }
}

bool BusClient::connected() const { return session_ && !session_->outbox.closed(); }

void BusClient::subscribe(const std::string& topic) {
  if (topics_.insert(topic).second && connected()) {
    session_->send(topic_frame(Opcode::Subscribe, topic));
  }
}

void BusClient::unsubscribe(const std::string& topic) {
  if (topics_.erase(topic) && connected()) {
    session_->send(topic_frame(Opcode::Unsubscribe, topic));
  }
}

bool BusClient::publish(const std::string& topic, const std::string& payload) {
  if (!connected()) {
    ++stats_.publish_dropped;
    return false;
  }
  session_->send(message_frame(Opcode::Publish, topic, payload));
  ++stats_.published;
  return true;
}

awaitable<void> BusClient::run() {
  auto self = shared_from_this();
  bool first = true;
  while (!stopping_) {
    const HostPort& hp = nodes_[current_];
    tcp::socket socket(ex_);
    error_code ec;
    co_await socket.async_connect({asio::ip::make_address(hp.host), hp.port},
                                  asio::redirect_error(use_awaitable, ec));
    if (stopping_) co_return;
    if (ec) {
      current_ = (current_ + 1) % nodes_.size();
      retry_.expires_after(std::chrono::milliseconds(200));
      co_await retry_.async_wait(asio::redirect_error(use_awaitable, ec));
      continue;
    }
    if (!first) ++stats_.reconnects;
    first = false;
    socket.set_option(tcp::no_delay(true), ec);
    auto s = std::make_shared<Session>(std::move(socket));
    session_ = s;
    asio::co_spawn(ex_, [s]() -> awaitable<void> { co_await s->outbox.run(); }, asio::detached);
    for (const auto& t : topics_) s->send(topic_frame(Opcode::Subscribe, t));

    FrameDecoder decoder;
    std::array<char, 64 * 1024> buf;
    try {
      for (;;) {
        std::size_t n = co_await s->socket.async_read_some(asio::buffer(buf), use_awaitable);
        decoder.feed(buf.data(), n);
        while (auto f = decoder.next()) {
          if (f->op != Opcode::Message) continue;
          BodyReader r(f->body);
          std::string topic = r.str();
          std::string payload = r.str();
          if (stopping_) break;
          ++stats_.received;
          if (on_message_) on_message_(topic, payload);
        }
      }
    } catch (const std::exception&) {
    }
    s->outbox.close();
    s->socket.close(ec);
    if (session_ == s) session_.reset();
    if (stopping_) co_return;
    current_ = (current_ + 1) % nodes_.size();
    retry_.expires_after(std::chrono::milliseconds(100));
    co_await retry_.async_wait(asio::redirect_error(use_awaitable, ec));
  }
}

}  // namespace iotc::slotstore
