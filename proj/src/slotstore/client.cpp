#include "iotc/slotstore/client.hpp"

#include <thread>

namespace iotc::slotstore {

struct ClusterClient::Link {
  explicit Link(asio::io_context& io) : socket(io) {}
  tcp::socket socket;
  FrameDecoder decoder;
};

namespace {

// Runs one coroutine on a private io_context with a deadline. On timeout the
// socket is closed so the coroutine unwinds before we return.
template <class T>
T run_with_deadline(asio::io_context& io, tcp::socket& socket, awaitable<T> op,
                    std::chrono::milliseconds timeout) {
  std::optional<T> result;
  std::exception_ptr error;
  bool done = false;
  asio::co_spawn(io, std::move(op), [&](std::exception_ptr e, T v) {
    done = true;
    error = e;
    if (!e) result = std::move(v);
  });
  io.restart();
  io.run_for(timeout);
  if (!done) {
    error_code ignored;
    socket.close(ignored);
    io.restart();
    io.run();
    throw NodeUnreachable("timed out");
  }
  if (error) {
    try {
      std::rethrow_exception(error);
    } catch (const boost::system::system_error& e) {
      throw NodeUnreachable(e.what());
    }
  }
  return std::move(*result);
}

}  // namespace

ClusterClient::ClusterClient(std::vector<HostPort> seeds, std::chrono::milliseconds timeout)
    : seeds_(std::move(seeds)), timeout_(timeout), map_(SlotMap::single("?")) {
  if (seeds_.empty()) throw std::invalid_argument("cluster client needs at least one seed");
  refresh();
}

ClusterClient::~ClusterClient() = default;

ClusterClient::Link& ClusterClient::link(const HostPort& at) {
  auto key = at.str();
  auto it = links_.find(key);
  if (it != links_.end() && it->second->socket.is_open()) return *it->second;
  auto l = std::make_unique<Link>(io_);
  tcp::endpoint ep(asio::ip::make_address(at.host), at.port);
  auto connect = [](tcp::socket& s, tcp::endpoint ep) -> awaitable<bool> {
    co_await s.async_connect(ep, use_awaitable);
    s.set_option(tcp::no_delay(true));
    co_return true;
  };
  run_with_deadline(io_, l->socket, connect(l->socket, ep), timeout_);
  auto& ref = *l;
  links_[key] = std::move(l);
  return ref;
}

void ClusterClient::drop(const HostPort& at) { links_.erase(at.str()); }

Frame ClusterClient::request(const HostPort& at, const Frame& f) {
  try {
    Link& l = link(at);
    auto exchange = [](Link& l, std::vector<std::uint8_t> out) -> awaitable<Frame> {
      co_await asio::async_write(l.socket, asio::buffer(out), use_awaitable);
      std::array<char, 16 * 1024> buf;
      for (;;) {
        if (auto f = l.decoder.next()) co_return std::move(*f);
        std::size_t n = co_await l.socket.async_read_some(asio::buffer(buf), use_awaitable);
        l.decoder.feed(buf.data(), n);
      }
    };
    return run_with_deadline(io_, l.socket, exchange(l, encode_frame(f)), timeout_);
  } catch (...) {
    drop(at);
    throw;
  }
}

nlohmann::json ClusterClient::admin(const HostPort& at, Opcode op, const std::string& arg) {
  Frame reply = request(at, arg.empty() ? Frame{op, {}} : string_frame(op, arg));
  if (reply.op == Opcode::Error) throw std::runtime_error(BodyReader(reply.body).str());
  if (reply.op != Opcode::Json) throw FrameError("expected JSON reply");
  return nlohmann::json::parse(BodyReader(reply.body).str());
}

void ClusterClient::refresh() {
  std::vector<HostPort> candidates;
  for (const auto& [id, hp] : addresses_) candidates.push_back(hp);
  candidates.insert(candidates.end(), seeds_.begin(), seeds_.end());
  std::string last_error = "no nodes";
  for (const auto& hp : candidates) {
    try {
      nlohmann::json j = admin(hp, Opcode::Slots);
      map_ = SlotMap::from_json(j.at("map"));
      addresses_.clear();
      for (const auto& [id, addr] : j.at("nodes").items()) {
        addresses_[id] = parse_host_port(addr.get<std::string>());
      }
      return;
    } catch (const NodeUnreachable& e) {
      last_error = hp.str() + ": " + e.what();
    }
  }
  throw RoutingError("no reachable node for slot map (" + last_error + ")");
}

KvReply ClusterClient::send_to(const NodeId& node, const KvCommand& cmd) {
  auto it = addresses_.find(node);
  if (it == addresses_.end()) throw RoutingError("unknown node " + node);
  Frame reply = request(it->second, kv_request(cmd));
  return parse_kv_response(reply);
}

KvReply ClusterClient::execute(const KvCommand& cmd) { return execute_via(map_.route(cmd.key), cmd); }

KvReply ClusterClient::execute_via(const NodeId& entry, const KvCommand& cmd) {
  NodeId target = entry;
  std::string last_error;
  for (int attempt = 0; attempt <= kRetryBudget; ++attempt) {
    KvReply reply;
    try {
      reply = send_to(target, cmd);
    } catch (const NodeUnreachable& e) {
      last_error = target + ": " + e.what();
      std::this_thread::sleep_for(std::chrono::milliseconds(50) * (attempt + 1));
      try {
        refresh();
      } catch (const RoutingError&) {
      }
      target = map_.route(cmd.key);
      continue;
    }
    if (reply.status != KvReply::Status::Moved) return reply;
    ++redirects_;
    last_error = "moved to " + reply.owner;
    target = reply.owner;
    try {
      refresh();
    } catch (const RoutingError&) {
    }
  }
  throw RoutingError("key '" + cmd.key + "' (slot " + std::to_string(hash_slot(cmd.key)) +
                     ") unreachable after " + std::to_string(kRetryBudget) + " retries: " + last_error);
}

KvReply ClusterClient::checked(const KvReply& r) {
  if (r.status == KvReply::Status::Error) throw std::runtime_error(r.error);
  return r;
}

void ClusterClient::set(const std::string& key, const std::string& value) {
  checked(execute(KvCommand::set(key, value)));
}

std::optional<std::string> ClusterClient::get(const std::string& key) {
  return checked(execute(KvCommand::get(key))).value;
}

bool ClusterClient::del(const std::string& key) { return checked(execute(KvCommand::del(key))).removed; }

}  // namespace iotc::slotstore
