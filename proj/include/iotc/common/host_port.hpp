#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace iotc {

struct HostPort {
  std::string host;
  std::uint16_t port = 0;

  std::string str() const;
  friend bool operator==(const HostPort&, const HostPort&) = default;
};

// Accepts "host:port" or ":port" (host defaults to 127.0.0.1).
// Throws std::invalid_argument on anything else.
HostPort parse_host_port(std::string_view text);

}  // namespace iotc
