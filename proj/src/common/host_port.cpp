#include "iotc/common/host_port.hpp"

#include <charconv>
#include <stdexcept>

namespace iotc {

std::string HostPort::str() const { return host + ":" + std::to_string(port); }

HostPort parse_host_port(std::string_view text) {
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos) {
    throw std::invalid_argument("expected host:port, got '" + std::string(text) + "'");
  }
  std::string_view host = text.substr(0, colon);
  std::string_view port_text = text.substr(colon + 1);
  unsigned value = 0;
  auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), value);
  if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || value > 65535 ||
      port_text.empty()) {
    throw std::invalid_argument("bad port in '" + std::string(text) + "'");
  }
  HostPort out;
  out.host = host.empty() ? "127.0.0.1" : std::string(host);
  if (out.host == "localhost") out.host = "127.0.0.1";
  out.port = static_cast<std::uint16_t>(value);
  return out;
}

}  // namespace iotc
