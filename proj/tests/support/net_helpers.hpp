#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <thread>

#include <unistd.h>

#include <boost/asio.hpp>

namespace iotc::testing {

// Asks the kernel for an unused TCP port on 127.0.0.1.
inline std::uint16_t free_port() {
  boost::asio::io_context io;
  boost::asio::ip::tcp::acceptor a(io, {boost::asio::ip::make_address("127.0.0.1"), 0});
  return a.local_endpoint().port();
}

inline bool wait_until(const std::function<bool()>& pred,
                       std::chrono::milliseconds timeout = std::chrono::seconds(10),
                       std::chrono::milliseconds step = std::chrono::milliseconds(20)) {
  auto deadline = std::chrono::steady_clock::now() + timeout;
  while (std::chrono::steady_clock::now() < deadline) {
    if (pred()) return true;
    std::this_thread::sleep_for(step);
  }
  return pred();
}

}  // namespace iotc::testing

namespace iotc::testing {

// First port p >= 20000 (randomized start) such that p .. p+n-1 are all free.
inline std::uint16_t free_port_range(int n) {
  static std::uint16_t cursor = static_cast<std::uint16_t>(20000 + (::getpid() * 37) % 20000);
  for (int tries = 0; tries < 2000; ++tries) {
    std::uint16_t base = cursor;
    cursor = static_cast<std::uint16_t>(cursor + n + 1);
    if (cursor > 60000) cursor = 20000;
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      boost::asio::io_context io;
      boost::asio::ip::tcp::acceptor a(io);
      boost::system::error_code ec;
      a.open(boost::asio::ip::tcp::v4(), ec);
      a.bind({boost::asio::ip::make_address("127.0.0.1"), static_cast<std::uint16_t>(base + i)}, ec);
      ok = !ec;
    }
    if (ok) return base;
  }
  throw std::runtime_error("no free port range");
}

}  // namespace iotc::testing
